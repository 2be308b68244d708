// fsponer command-line interface: stratify / select / prompt / run / eval / report.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "fsponer/experiment.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  auto p = fs::path(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

fsponer::PromptTemplate load_template(const std::string& template_path,
                                      const std::string& domain,
                                      const std::set<fsponer::EntityType>& labels) {
  if (template_path.empty()) return fsponer::default_template(domain, labels);
  return fsponer::template_from_json(json::parse(read_file(template_path)));
}

int cmd_stratify(const std::string& input, const std::string& format, int size,
                 const std::string& out_path, const std::string& coverage_path) {
  auto corpus = fsponer::load_corpus(input, format);
  auto ds = fsponer::build_stratified(corpus, size);
  write_file(out_path, fsponer::stratified_to_jsonl(ds));
  auto coverage = fsponer::coverage_report(ds, corpus);
  json cov = fsponer::coverage_to_json(coverage);
  cov["pool_size"] = ds.examples.size();
  cov["target_size"] = ds.target_size;
  json credits = json::object();
  for (const auto& [t, c] : ds.per_type_counts) credits[t] = c;
  cov["per_type_credits"] = credits;
  write_file(coverage_path, cov.dump(2) + "\n");
  std::cout << "wrote " << ds.examples.size() << " examples to " << out_path << "\n";
  if (corpus.repair_count)
    std::cout << "repaired " << corpus.repair_count << " malformed tag transitions\n";
  return 0;
}

int cmd_select(const std::string& pool_path, const std::string& test_path,
               const std::string& format, const std::string& strategy, int k,
               std::uint64_t seed) {
  auto pool = fsponer::stratified_from_jsonl(read_file(pool_path));
  auto test = fsponer::load_corpus(test_path, format);
  auto strat = fsponer::strategy_from_name(strategy);
  fsponer::TfIdfModel model;
  if (strat == fsponer::Strategy::TfIdf || strat == fsponer::Strategy::Combined)
    model = fsponer::fit(pool.examples);
  for (size_t i = 0; i < test.sentences.size(); ++i) {
    fsponer::SelectionConfig cfg{strat, k, seed, static_cast<int>(i)};
    fsponer::SelectionResult sel;
    switch (strat) {
      case fsponer::Strategy::Random:
        sel = fsponer::select_random(pool, cfg);
        break;
      case fsponer::Strategy::TfIdf:
        sel = fsponer::select_tfidf(pool, model, test.sentences[i], cfg);
        break;
      case fsponer::Strategy::Combined:
        sel = fsponer::select_combined(pool, model, test.sentences[i], cfg);
        break;
      default:
        throw std::runtime_error("strategy not available from the CLI");
    }
    std::cout << fsponer::selection_to_json(sel, static_cast<int>(i)).dump() << "\n";
  }
  return 0;
}

int cmd_prompt(const std::string& pool_path, const std::string& test_path,
               const std::string& format, const std::string& strategy, int k,
               std::uint64_t seed, const std::string& template_path,
               const std::string& domain, int index) {
  auto pool = fsponer::stratified_from_jsonl(read_file(pool_path));
  auto test = fsponer::load_corpus(test_path, format);
  if (index < 0 || index >= static_cast<int>(test.sentences.size()))
    throw std::runtime_error("sentence index out of range");
  auto strat = fsponer::strategy_from_name(strategy);
  fsponer::TfIdfModel model;
  if (strat != fsponer::Strategy::Random) model = fsponer::fit(pool.examples);
  fsponer::SelectionConfig cfg{strat, k, seed, index};
  fsponer::SelectionResult sel;
  if (strat == fsponer::Strategy::Random)
    sel = fsponer::select_random(pool, cfg);
  else if (strat == fsponer::Strategy::Combined)
    sel = fsponer::select_combined(pool, model, test.sentences[index], cfg);
  else
    sel = fsponer::select_tfidf(pool, model, test.sentences[index], cfg);

  std::set<fsponer::EntityType> labels = test.label_set;
  for (const auto& s : pool.examples)
    for (const auto& sp : s.spans) labels.insert(sp.etype);
  auto tmpl = load_template(template_path, domain, labels);
  std::vector<fsponer::TaggedSentence> chosen;
  for (int id : sel.chosen) chosen.push_back(pool.examples[id]);
  auto prompt = fsponer::build_prompt(tmpl, chosen, test.sentences[index]);
  std::cout << prompt.text << "\n";
  std::cerr << "token_estimate: " << prompt.token_estimate << "\n";
  return 0;
}

int cmd_eval(const std::string& gold_path, const std::string& format,
             const std::string& completions_path, const std::string& out_path) {
  auto gold = fsponer::load_corpus(gold_path, format);
  // completions: JSON-lines {"id": <sentence id>, "completion": "..."}
  std::istringstream in(read_file(completions_path));
  std::map<int, std::string> completions;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto obj = json::parse(line);
    completions[obj.at("id").get<int>()] = obj.at("completion").get<std::string>();
  }
  std::vector<fsponer::ParseReport> parsed;
  for (const auto& s : gold.sentences) {
    auto it = completions.find(s.id);
    parsed.push_back(fsponer::parse_completion(it == completions.end() ? "" : it->second,
                                               gold.label_set, s.tokens));
  }
  auto report = fsponer::evaluate(parsed, gold.sentences);
  auto j = fsponer::eval_to_json(report);
  if (!out_path.empty()) write_file(out_path, j.dump(2) + "\n");
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_run(const std::string& config_path, json overrides) {
  json j = config_path.empty() ? json::object() : json::parse(read_file(config_path));
  for (auto& [key, value] : overrides.items()) {
    if (key == "llm_backend" || key == "llm_model" || key == "llm_endpoint") {
      if (!j.contains("llm")) j["llm"] = json::object();
      j["llm"][key.substr(4)] = value;
    } else {
      j[key] = value;
    }
  }
  auto cfg = fsponer::config_from_json(j);
  auto result = fsponer::run_experiment(cfg);
  bool all_complete = true;
  for (const auto& kp : result.per_k) {
    std::cout << "k=" << kp.k;
    if (kp.complete)
      std::cout << " weighted_f1=" << kp.report.weighted_f1
                << " micro_f1=" << kp.report.micro_f1
                << " hallucination_rate=" << kp.report.hallucination_rate << "\n";
    else {
      std::cout << " INCOMPLETE: " << kp.error << "\n";
      all_complete = false;
    }
  }
  std::cout << "backend_calls=" << result.backend_calls << " cache_hits=" << result.cache_hits
            << " wall_seconds=" << result.wall_seconds << "\n";
  return all_complete ? 0 : 1;
}

int cmd_report(const std::vector<std::string>& run_files, const std::string& format,
               const std::string& out_path) {
  // Rebuild report rows from persisted run_result.json summaries.
  std::vector<fsponer::RunResult> results;
  for (const auto& path : run_files) {
    auto j = json::parse(read_file(path));
    fsponer::RunResult r;
    r.config.strategy = fsponer::strategy_from_name(j.value("strategy", "tfidf"));
    r.config.llm.model = j.value("model", "?");
    r.config.pool_size = j.value("pool_size", 0);
    for (const auto& kj : j.at("per_k")) {
      fsponer::KPointResult kp;
      kp.k = kj.at("k").get<int>();
      kp.complete = kj.value("complete", false);
      if (kp.complete) {
        const auto& rep = kj.at("report");
        kp.report.weighted_f1 = rep.value("weighted_f1", 0.0);
        kp.report.micro_f1 = rep.value("micro_f1", 0.0);
        kp.report.hallucination_rate = rep.value("hallucination_rate", 0.0);
      }
      r.per_k.push_back(std::move(kp));
    }
    results.push_back(std::move(r));
  }
  fsponer::ReportFormat rf = format == "json"  ? fsponer::ReportFormat::Json
                             : format == "md" ? fsponer::ReportFormat::Md
                                              : fsponer::ReportFormat::Csv;
  auto doc = fsponer::report(results, rf);
  if (!out_path.empty())
    write_file(out_path, doc);
  else
    std::cout << doc;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FsPONER: few-shot prompt optimization for domain-specific NER"};
  app.require_subcommand(1);

  std::string input, format = "auto", out_path, coverage_path = "coverage.json";
  std::string pool_path, test_path, strategy = "tfidf", template_path, domain = "industrial";
  std::string config_path, gold_path, completions_path;
  std::vector<std::string> run_files;
  int size = 300, k = 20, index = 0;
  std::uint64_t seed = 0;

  auto* strat_cmd = app.add_subcommand("stratify", "Build a stratified few-shot pool");
  strat_cmd->add_option("--input", input, "corpus file")->required();
  strat_cmd->add_option("--format", format, "conll|jsonl|auto");
  strat_cmd->add_option("--size", size, "target pool size (default 300)");
  strat_cmd->add_option("--out", out_path, "pool output (jsonl)")->required();
  strat_cmd->add_option("--coverage", coverage_path, "coverage report output");

  auto* select_cmd = app.add_subcommand("select", "Emit per-input selection JSON");
  select_cmd->add_option("--pool", pool_path)->required();
  select_cmd->add_option("--test", test_path)->required();
  select_cmd->add_option("--format", format);
  select_cmd->add_option("--strategy", strategy, "random|tfidf|combined");
  select_cmd->add_option("--k", k);
  select_cmd->add_option("--seed", seed);

  auto* prompt_cmd = app.add_subcommand("prompt", "Render one prompt for inspection");
  prompt_cmd->add_option("--pool", pool_path)->required();
  prompt_cmd->add_option("--test", test_path)->required();
  prompt_cmd->add_option("--format", format);
  prompt_cmd->add_option("--strategy", strategy);
  prompt_cmd->add_option("--k", k);
  prompt_cmd->add_option("--seed", seed);
  prompt_cmd->add_option("--template", template_path, "template JSON file");
  prompt_cmd->add_option("--domain", domain);
  prompt_cmd->add_option("--index", index, "test sentence index");

  auto* run_cmd = app.add_subcommand("run", "Run a configured experiment sweep");
  run_cmd->add_option("--config", config_path, "experiment config JSON");
  std::string r_train, r_test, r_pool, r_strategy, r_output, r_backend, r_model, r_endpoint;
  std::vector<int> r_kvalues;
  int r_pool_size = -999, r_test_limit = -999;
  std::int64_t r_seed = -1;
  run_cmd->add_option("--train", r_train);
  run_cmd->add_option("--test", r_test);
  run_cmd->add_option("--pool", r_pool);
  run_cmd->add_option("--strategy", r_strategy);
  run_cmd->add_option("--k-values", r_kvalues)->delimiter(',');
  run_cmd->add_option("--pool-size", r_pool_size);
  run_cmd->add_option("--test-limit", r_test_limit);
  run_cmd->add_option("--seed", r_seed);
  run_cmd->add_option("--output-dir", r_output);
  run_cmd->add_option("--backend", r_backend, "http|mock_gold");
  run_cmd->add_option("--model", r_model);
  run_cmd->add_option("--endpoint", r_endpoint);

  auto* eval_cmd = app.add_subcommand("eval", "Score completions against a gold corpus");
  eval_cmd->add_option("--gold", gold_path)->required();
  eval_cmd->add_option("--format", format);
  eval_cmd->add_option("--completions", completions_path, "jsonl of {id, completion}")
      ->required();
  eval_cmd->add_option("--out", out_path);

  auto* report_cmd = app.add_subcommand("report", "Tabulate run_result.json files");
  std::string report_format = "csv";
  report_cmd->add_option("files", run_files, "run_result.json paths")->required();
  report_cmd->add_option("--format", report_format, "csv|json|md");
  report_cmd->add_option("--out", out_path);

  CLI11_PARSE(app, argc, argv);

  try {
    if (strat_cmd->parsed())
      return cmd_stratify(input, format, size, out_path, coverage_path);
    if (select_cmd->parsed())
      return cmd_select(pool_path, test_path, format, strategy, k, seed);
    if (prompt_cmd->parsed())
      return cmd_prompt(pool_path, test_path, format, strategy, k, seed, template_path,
                        domain, index);
    if (run_cmd->parsed()) {
      json overrides = json::object();
      if (!r_train.empty()) overrides["train"] = r_train;
      if (!r_test.empty()) overrides["test"] = r_test;
      if (!r_pool.empty()) overrides["pool"] = r_pool;
      if (!r_strategy.empty()) overrides["strategy"] = r_strategy;
      if (!r_kvalues.empty()) overrides["k_values"] = r_kvalues;
      if (r_pool_size != -999) overrides["pool_size"] = r_pool_size;
      if (r_test_limit != -999) overrides["test_limit"] = r_test_limit;
      if (r_seed >= 0) overrides["seed"] = r_seed;
      if (!r_output.empty()) overrides["output_dir"] = r_output;
      if (!r_backend.empty()) overrides["llm_backend"] = r_backend;
      if (!r_model.empty()) overrides["llm_model"] = r_model;
      if (!r_endpoint.empty()) overrides["llm_endpoint"] = r_endpoint;
      return cmd_run(config_path, overrides);
    }
    if (eval_cmd->parsed()) return cmd_eval(gold_path, format, completions_path, out_path);
    if (report_cmd->parsed()) return cmd_report(run_files, report_format, out_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
