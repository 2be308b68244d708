#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "fsponer/experiment.hpp"
#include "helpers.hpp"

using namespace fsponer;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("fsponer_exp_" + std::to_string(::getpid()) + "_" +
            std::to_string(reinterpret_cast<uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Write a synthetic train/test pair and return a ready config.
ExperimentConfig setup(TempDir& dir, Strategy strategy, std::vector<int> ks) {
  auto train = testutil::make_corpus(120, {"A", "B", "C"}, 41, 1);
  auto test = testutil::make_corpus(15, {"A", "B", "C"}, 42, 1);
  std::ofstream(dir.path / "train.jsonl") << corpus_to_jsonl(train);
  std::ofstream(dir.path / "test.jsonl") << corpus_to_jsonl(test);
  ExperimentConfig cfg;
  cfg.train_path = (dir.path / "train.jsonl").string();
  cfg.test_path = (dir.path / "test.jsonl").string();
  cfg.strategy = strategy;
  cfg.k_values = std::move(ks);
  cfg.pool_size = 60;
  cfg.output_dir = (dir.path / "out").string();
  cfg.cache_dir = (dir.path / "cache").string();
  return cfg;
}

}  // namespace

TEST_CASE("mock_gold end-to-end reaches weighted F1 1.0 at every k") {
  TempDir dir;
  for (auto strategy : {Strategy::Random, Strategy::TfIdf, Strategy::Combined}) {
    auto cfg = setup(dir, strategy, {1, 5});
    cfg.output_dir = (dir.path / ("out_" + strategy_name(strategy))).string();
    auto result = run_experiment(cfg);
    REQUIRE(result.per_k.size() == 2);
    for (const auto& kp : result.per_k) {
      CHECK(kp.complete);
      CHECK(kp.report.weighted_f1 == 1.0);
    }
  }
}

TEST_CASE("test_limit slices the first n sentences deterministically") {
  TempDir dir;
  auto cfg = setup(dir, Strategy::TfIdf, {2});
  cfg.test_limit = 4;
  auto result = run_experiment(cfg);
  CHECK(result.per_k[0].report.n_sentences == 4);
  CHECK(fs::exists(fs::path(cfg.output_dir) / "k2" / "prompts" / "3.txt"));
  CHECK(!fs::exists(fs::path(cfg.output_dir) / "k2" / "prompts" / "4.txt"));
}

TEST_CASE("warm cache re-run is byte-identical with zero backend calls") {
  TempDir dir;
  auto cfg = setup(dir, Strategy::Combined, {3});
  auto first = run_experiment(cfg);
  CHECK(first.backend_calls == 15);

  auto out1 = slurp(fs::path(cfg.output_dir) / "k3" / "report.json");
  auto sel1 = slurp(fs::path(cfg.output_dir) / "k3" / "selections.jsonl");
  auto prompt1 = slurp(fs::path(cfg.output_dir) / "k3" / "prompts" / "0.txt");

  cfg.output_dir = (dir.path / "out2").string();
  auto second = run_experiment(cfg);
  CHECK(second.backend_calls == 0);
  CHECK(second.cache_hits == 15);
  CHECK(slurp(fs::path(cfg.output_dir) / "k3" / "report.json") == out1);
  CHECK(slurp(fs::path(cfg.output_dir) / "k3" / "selections.jsonl") == sel1);
  CHECK(slurp(fs::path(cfg.output_dir) / "k3" / "prompts" / "0.txt") == prompt1);
}

TEST_CASE("persisted prompts match the logged selections") {
  TempDir dir;
  auto cfg = setup(dir, Strategy::TfIdf, {4});
  run_experiment(cfg);
  auto pool_corpus = load_corpus(cfg.train_path, "auto");
  auto pool = build_stratified(pool_corpus, cfg.pool_size);

  std::istringstream sel(slurp(fs::path(cfg.output_dir) / "k4" / "selections.jsonl"));
  std::string line;
  int idx = 0;
  while (std::getline(sel, line)) {
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line);
    auto prompt = slurp(fs::path(cfg.output_dir) / "k4" / "prompts" /
                        (std::to_string(idx) + ".txt"));
    for (int id : j.at("chosen").get<std::vector<int>>()) {
      // each chosen example's sentence text must appear in the prompt
      CHECK(prompt.find("Sentence: " + pool.examples[id].text()) != std::string::npos);
    }
    ++idx;
  }
  CHECK(idx == 15);
}

TEST_CASE("pool_size sweep produces pools of the requested sizes") {
  TempDir dir;
  for (int size : {20, 40, 60}) {
    auto cfg = setup(dir, Strategy::Random, {1});
    cfg.pool_size = size;
    cfg.output_dir = (dir.path / ("out_pool" + std::to_string(size))).string();
    run_experiment(cfg);
    auto j = nlohmann::json::parse(
        slurp(fs::path(cfg.output_dir) / "run_result.json"));
    CHECK(j.at("pool_size").get<int>() == size);
  }
}

TEST_CASE("backend failure marks the k-point incomplete, artifacts persist") {
  TempDir dir;
  auto cfg = setup(dir, Strategy::Random, {2});
  class FailingBackend : public CompletionBackend {
   public:
    std::string complete(const std::string&) override {
      throw std::runtime_error("backend down");
    }
    std::string id() const override { return "failing"; }
  };
  auto result = run_experiment(cfg, std::make_shared<FailingBackend>());
  REQUIRE(result.per_k.size() == 1);
  CHECK(!result.per_k[0].complete);
  CHECK(result.per_k[0].error.find("backend down") != std::string::npos);
  CHECK(fs::exists(fs::path(cfg.output_dir) / "k2" / "prompts" / "0.txt"));
  auto summary = nlohmann::json::parse(slurp(fs::path(cfg.output_dir) / "run_result.json"));
  CHECK(summary["per_k"][0]["complete"] == false);
}

TEST_CASE("report formats agree cell for cell") {
  TempDir dir;
  std::vector<RunResult> results;
  for (auto strategy : {Strategy::Random, Strategy::TfIdf}) {
    auto cfg = setup(dir, strategy, {1, 2, 3});
    cfg.output_dir = (dir.path / ("rout_" + strategy_name(strategy))).string();
    results.push_back(run_experiment(cfg));
  }
  auto csv = report(results, ReportFormat::Csv);
  auto md = report(results, ReportFormat::Md);
  auto js = nlohmann::json::parse(report(results, ReportFormat::Json));

  // 2 strategies x 3 k = 6 rows + header
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);
  CHECK(js.size() == 6);
  // stable sort by (strategy, k)
  CHECK(js[0]["strategy"] == "random");
  CHECK(js[0]["k"] == 1);
  CHECK(js[5]["strategy"] == "tfidf");
  CHECK(js[5]["k"] == 3);
  // md table holds the same cells as csv
  for (const auto& row : js) {
    std::string needle = "| " + row["strategy"].get<std::string>() + " | " +
                         std::to_string(row["k"].get<int>()) + " | ";
    CHECK(md.find(needle) != std::string::npos);
  }
  CHECK_THROWS(report({}, ReportFormat::Csv));
}

TEST_CASE("single run report has one data row plus header") {
  TempDir dir;
  auto cfg = setup(dir, Strategy::Random, {5});
  auto result = run_experiment(cfg);
  auto csv = report({result}, ReportFormat::Csv);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
}
