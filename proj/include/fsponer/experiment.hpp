#pragma once

// Config-driven experiment runner: k-sweeps and pool-size sweeps over a fixed
// pipeline of stratify -> select -> prompt -> complete -> parse -> evaluate,
// with all prompts, completions, and reports persisted per run.

#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fsponer/corpus.hpp"
#include "fsponer/eval.hpp"
#include "fsponer/llm.hpp"
#include "fsponer/llm_http.hpp"
#include "fsponer/parse.hpp"
#include "fsponer/prompt.hpp"
#include "fsponer/selector.hpp"
#include "fsponer/stratify.hpp"
#include "fsponer/tfidf.hpp"

namespace fsponer {

struct ExperimentConfig {
  std::string train_path;     // corpus to stratify from
  std::string pool_path;      // pre-built pool (overrides train_path)
  std::string test_path;
  std::string format = "auto";  // conll | jsonl | auto (by extension)
  Strategy strategy = Strategy::TfIdf;
  std::vector<int> k_values = {1, 5, 10, 20, 40, 80};
  int pool_size = 300;        // <= 0 means the full dataset
  std::uint64_t seed = 0;
  LlmConfig llm;
  std::string template_path;
  std::string domain = "industrial";
  std::string output_dir = "runs/out";
  std::string cache_dir = "cache";
  int test_limit = -1;        // cap on evaluated sentences, -1 = all
  int workers = 4;
};

struct KPointResult {
  int k = 0;
  EvalReport report;
  bool complete = false;
  std::string error;
};

struct RunResult {
  ExperimentConfig config;
  std::vector<KPointResult> per_k;
  double wall_seconds = 0;
  long backend_calls = 0;
  long cache_hits = 0;
};

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  cfg.train_path = j.value("train", "");
  cfg.pool_path = j.value("pool", "");
  cfg.test_path = j.value("test", "");
  cfg.format = j.value("format", "auto");
  if (j.contains("strategy")) cfg.strategy = strategy_from_name(j["strategy"].get<std::string>());
  if (j.contains("k_values")) cfg.k_values = j["k_values"].get<std::vector<int>>();
  cfg.pool_size = j.value("pool_size", 300);
  cfg.seed = j.value("seed", 0ULL);
  cfg.template_path = j.value("template", "");
  cfg.domain = j.value("domain", "industrial");
  cfg.output_dir = j.value("output_dir", "runs/out");
  cfg.cache_dir = j.value("cache_dir", "cache");
  cfg.test_limit = j.value("test_limit", -1);
  cfg.workers = j.value("workers", 4);
  if (j.contains("llm")) {
    const auto& l = j["llm"];
    std::string backend = l.value("backend", "mock_gold");
    if (backend == "http")
      cfg.llm.backend = BackendKind::Http;
    else if (backend == "scripted")
      cfg.llm.backend = BackendKind::Scripted;
    else
      cfg.llm.backend = BackendKind::MockGold;
    cfg.llm.endpoint = l.value("endpoint", "");
    cfg.llm.model = l.value("model", "mock");
    cfg.llm.temperature = l.value("temperature", 0.0);
    cfg.llm.max_output_tokens = l.value("max_output_tokens", 512);
    cfg.llm.timeout_seconds = l.value("timeout_seconds", 60);
    cfg.llm.max_retries = l.value("max_retries", 3);
  }
  return cfg;
}

inline Corpus load_corpus(const std::string& path, const std::string& format) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  bool jsonl = format == "jsonl" ||
               (format == "auto" && (path.ends_with(".jsonl") || path.ends_with(".json")));
  return jsonl ? parse_jsonl(buf.str()) : parse_conll(buf.str());
}

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

}  // namespace detail

// One k-point: per test sentence select, build prompt, complete, parse;
// then aggregate. Completion calls run in bounded batches; everything else
// is sequential and deterministic.
inline KPointResult run_k_point(const ExperimentConfig& cfg, int k,
                                const StratifiedDataset& pool, const TfIdfModel& model,
                                const PromptTemplate& tmpl,
                                const std::vector<TaggedSentence>& test, LlmClient& client,
                                const std::filesystem::path& outdir) {
  KPointResult result;
  result.k = k;
  std::vector<RenderedPrompt> prompts(test.size());
  std::string selections_log;

  for (size_t i = 0; i < test.size(); ++i) {
    SelectionConfig scfg{cfg.strategy, k, cfg.seed, static_cast<int>(i)};
    SelectionResult sel;
    switch (cfg.strategy) {
      case Strategy::Random:
        sel = select_random(pool, scfg);
        break;
      case Strategy::TfIdf:
        sel = select_tfidf(pool, model, test[i], scfg);
        break;
      case Strategy::Combined:
        sel = select_combined(pool, model, test[i], scfg);
        break;
      case Strategy::Embedding:
        throw std::runtime_error("embedding strategy needs a provider; use the library API");
    }
    std::vector<TaggedSentence> chosen;
    for (int id : sel.chosen) chosen.push_back(pool.examples[id]);
    prompts[i] = build_prompt(tmpl, chosen, test[i]);
    selections_log += selection_to_json(sel, static_cast<int>(i)).dump() + "\n";
    detail::write_file(outdir / "prompts" / (std::to_string(i) + ".txt"), prompts[i].text);
  }
  detail::write_file(outdir / "selections.jsonl", selections_log);

  std::vector<CompletionRecord> records(test.size());
  try {
    size_t batch = std::max(1, cfg.workers);
    for (size_t base = 0; base < prompts.size(); base += batch) {
      std::vector<std::future<CompletionRecord>> inflight;
      size_t end = std::min(prompts.size(), base + batch);
      for (size_t i = base; i < end; ++i)
        inflight.push_back(std::async(std::launch::async,
                                      [&client, &prompts, i] { return client.complete(prompts[i]); }));
      for (size_t i = base; i < end; ++i) records[i] = inflight[i - base].get();
    }
  } catch (const std::exception& e) {
    result.error = e.what();
    return result;  // partial artifacts stay on disk, marked incomplete
  }

  std::vector<ParseReport> parsed;
  std::set<EntityType> label_set;
  for (const auto& [t, _] : tmpl.entity_types) label_set.insert(t);
  for (size_t i = 0; i < test.size(); ++i) {
    detail::write_file(outdir / "completions" / (std::to_string(i) + ".txt"),
                       records[i].completion);
    parsed.push_back(parse_completion(records[i].completion, label_set, test[i].tokens));
  }
  result.report = evaluate(parsed, test);
  result.complete = true;
  detail::write_file(outdir / "report.json", eval_to_json(result.report).dump(2) + "\n");
  return result;
}

inline std::shared_ptr<CompletionBackend> make_backend(const ExperimentConfig& cfg,
                                                       const Corpus& test_corpus) {
  switch (cfg.llm.backend) {
    case BackendKind::Http:
      return make_http_backend(cfg.llm);
    case BackendKind::MockGold:
      return std::make_shared<MockGoldBackend>(test_corpus.sentences);
    case BackendKind::Scripted:
      throw std::runtime_error("scripted backend requires an explicit script (library API)");
  }
  throw std::runtime_error("unknown backend");
}

inline RunResult run_experiment(const ExperimentConfig& cfg,
                                std::shared_ptr<CompletionBackend> backend = nullptr) {
  auto start = std::chrono::steady_clock::now();

  Corpus test_corpus = load_corpus(cfg.test_path, cfg.format);
  std::vector<TaggedSentence> test = test_corpus.sentences;
  if (cfg.test_limit >= 0 && static_cast<int>(test.size()) > cfg.test_limit)
    test.resize(cfg.test_limit);

  StratifiedDataset pool;
  if (!cfg.pool_path.empty()) {
    std::ifstream in(cfg.pool_path);
    if (!in) throw std::runtime_error("cannot open " + cfg.pool_path);
    std::stringstream buf;
    buf << in.rdbuf();
    pool = stratified_from_jsonl(buf.str());
  } else {
    Corpus train = load_corpus(cfg.train_path, cfg.format);
    int size = cfg.pool_size > 0 ? cfg.pool_size : static_cast<int>(train.sentences.size());
    pool = build_stratified(train, size);
  }
  if (pool.examples.empty()) throw std::runtime_error("empty few-shot pool");

  TfIdfModel model;
  if (cfg.strategy == Strategy::TfIdf || cfg.strategy == Strategy::Combined)
    model = fit(pool.examples);

  PromptTemplate tmpl;
  if (!cfg.template_path.empty()) {
    std::ifstream in(cfg.template_path);
    if (!in) throw std::runtime_error("cannot open " + cfg.template_path);
    nlohmann::json j;
    in >> j;
    tmpl = template_from_json(j);
  } else {
    std::set<EntityType> labels = test_corpus.label_set;
    for (const auto& s : pool.examples)
      for (const auto& sp : s.spans) labels.insert(sp.etype);
    tmpl = default_template(cfg.domain, labels);
  }

  if (!backend) backend = make_backend(cfg, test_corpus);
  LlmClient client(cfg.llm, backend, cfg.cache_dir);

  RunResult run;
  run.config = cfg;
  for (int k : cfg.k_values) {
    auto outdir = std::filesystem::path(cfg.output_dir) / ("k" + std::to_string(k));
    run.per_k.push_back(run_k_point(cfg, k, pool, model, tmpl, test, client, outdir));
  }
  run.backend_calls = client.backend_calls();
  run.cache_hits = client.cache_hits();
  run.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  nlohmann::json summary;
  summary["strategy"] = strategy_name(cfg.strategy);
  summary["model"] = cfg.llm.model;
  summary["pool_size"] = static_cast<int>(pool.examples.size());
  summary["seed"] = cfg.seed;
  summary["backend_calls"] = run.backend_calls;
  summary["cache_hits"] = run.cache_hits;
  summary["wall_seconds"] = run.wall_seconds;
  auto ks = nlohmann::json::array();
  for (const auto& kp : run.per_k) {
    nlohmann::json kj;
    kj["k"] = kp.k;
    kj["complete"] = kp.complete;
    if (!kp.error.empty()) kj["error"] = kp.error;
    if (kp.complete) kj["report"] = eval_to_json(kp.report);
    ks.push_back(std::move(kj));
  }
  summary["per_k"] = std::move(ks);
  detail::write_file(std::filesystem::path(cfg.output_dir) / "run_result.json",
                     summary.dump(2) + "\n");
  return run;
}

enum class ReportFormat { Csv, Json, Md };

// One row per (strategy, k, pool_size, model), stable-sorted by (strategy, k).
inline std::string report(const std::vector<RunResult>& results, ReportFormat format) {
  if (results.empty()) throw std::runtime_error("no results to report");
  struct Row {
    std::string strategy, model;
    int k, pool_size;
    double weighted_f1, micro_f1, hallucination_rate;
    bool complete;
  };
  std::vector<Row> rows;
  for (const auto& r : results)
    for (const auto& kp : r.per_k)
      rows.push_back({strategy_name(r.config.strategy), r.config.llm.model, kp.k,
                      r.config.pool_size, kp.report.weighted_f1, kp.report.micro_f1,
                      kp.report.hallucination_rate, kp.complete});
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (a.strategy != b.strategy) return a.strategy < b.strategy;
    return a.k < b.k;
  });

  auto fmt = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return std::string(buf);
  };

  if (format == ReportFormat::Json) {
    auto arr = nlohmann::json::array();
    for (const auto& r : rows)
      arr.push_back({{"strategy", r.strategy},
                     {"k", r.k},
                     {"pool_size", r.pool_size},
                     {"model", r.model},
                     {"weighted_f1", r.weighted_f1},
                     {"micro_f1", r.micro_f1},
                     {"hallucination_rate", r.hallucination_rate},
                     {"complete", r.complete}});
    return arr.dump(2) + "\n";
  }

  std::string out;
  if (format == ReportFormat::Csv) {
    out = "strategy,k,pool_size,model,weighted_f1,micro_f1,hallucination_rate,complete\n";
    for (const auto& r : rows)
      out += r.strategy + "," + std::to_string(r.k) + "," + std::to_string(r.pool_size) + "," +
             r.model + "," + fmt(r.weighted_f1) + "," + fmt(r.micro_f1) + "," +
             fmt(r.hallucination_rate) + "," + (r.complete ? "true" : "false") + "\n";
  } else {
    out = "| strategy | k | pool_size | model | weighted_f1 | micro_f1 | hallucination_rate | complete |\n";
    out += "|---|---|---|---|---|---|---|---|\n";
    for (const auto& r : rows)
      out += "| " + r.strategy + " | " + std::to_string(r.k) + " | " +
             std::to_string(r.pool_size) + " | " + r.model + " | " + fmt(r.weighted_f1) +
             " | " + fmt(r.micro_f1) + " | " + fmt(r.hallucination_rate) + " | " +
             (r.complete ? "true" : "false") + " |\n";
  }
  return out;
}

}  // namespace fsponer
