#pragma once

// Chat-completion backends: an OpenAI-compatible HTTP client plus two
// deterministic offline backends (gold-echo and seeded noise) for testing.
// Completions are cached on disk keyed by (prompt, model, temperature) hash.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <deque>
#include <filesystem>
#include <optional>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "fsponer/prompt.hpp"
#include "fsponer/selector.hpp"
#include "fsponer/tfidf.hpp"

namespace fsponer {

enum class BackendKind { Http, MockGold, Scripted };

struct LlmConfig {
  BackendKind backend = BackendKind::MockGold;
  std::string endpoint;  // base URL, e.g. http://localhost:8080/v1
  std::string model = "mock";
  double temperature = 0.0;
  int max_output_tokens = 512;
  int timeout_seconds = 60;
  int max_retries = 3;
};

struct CompletionRecord {
  std::string prompt_hash;
  std::string completion;
  long latency_ms = 0;
  std::string backend_id;
  std::string timestamp;
  bool from_cache = false;
};

inline std::string prompt_hash(const std::string& prompt_text, const std::string& model,
                               double temperature) {
  std::uint64_t h = fnv1a(prompt_text);
  h = fnv1a("\x1f" + model, h);
  char tbuf[32];
  std::snprintf(tbuf, sizeof(tbuf), "\x1f%.6f", temperature);
  h = fnv1a(tbuf, h);
  // Second pass with a different basis widens to 128 bits.
  std::uint64_t h2 = fnv1a(prompt_text + "\x1f" + model + tbuf, 0x84222325cbf29ce4ULL);
  char buf[33];
  std::snprintf(buf, sizeof(buf), "%016llx%016llx", static_cast<unsigned long long>(h),
                static_cast<unsigned long long>(h2));
  return buf;
}

class CompletionBackend {
 public:
  virtual ~CompletionBackend() = default;
  virtual std::string complete(const std::string& prompt_text) = 0;
  virtual std::string id() const = 0;
};

// Canonical gold rendering of a sentence's spans: the entity lines only.
inline std::string gold_completion(const TaggedSentence& s) {
  if (s.spans.empty()) return "NONE";
  std::string out;
  for (size_t i = 0; i < s.spans.size(); ++i) {
    if (i) out += '\n';
    out += s.span_text(s.spans[i]) + " :: " + s.spans[i].etype;
  }
  return out;
}

// Oracle backend: answers with the gold entities of whatever sentence the
// prompt's final "Sentence:" line names. Known-answer end-to-end F1 is 1.0.
class MockGoldBackend : public CompletionBackend {
 public:
  explicit MockGoldBackend(const std::vector<TaggedSentence>& gold) {
    for (const auto& s : gold) by_text_[s.text()] = gold_completion(s);
  }

  std::string complete(const std::string& prompt_text) override {
    auto it = by_text_.find(extract_input_sentence(prompt_text));
    if (it == by_text_.end())
      throw std::runtime_error("mock_gold: input sentence not in gold set");
    return it->second;
  }

  std::string id() const override { return "mock_gold"; }

  static std::string extract_input_sentence(const std::string& prompt_text) {
    auto pos = prompt_text.rfind("Sentence: ");
    if (pos == std::string::npos) throw std::runtime_error("mock_gold: no Sentence: line");
    auto end = prompt_text.find('\n', pos);
    if (end == std::string::npos) end = prompt_text.size();
    return prompt_text.substr(pos + 10, end - pos - 10);
  }

 private:
  std::map<std::string, std::string> by_text_;
};

// Fixed script keyed by prompt hash; unknown prompts are an error.
class ScriptedBackend : public CompletionBackend {
 public:
  explicit ScriptedBackend(std::map<std::string, std::string> script)
      : script_(std::move(script)) {}

  std::string complete(const std::string& prompt_text) override {
    auto it = script_.find(prompt_hash(prompt_text, "scripted", 0.0));
    if (it == script_.end()) throw std::runtime_error("scripted backend: prompt not in script");
    return it->second;
  }

  std::string id() const override { return "scripted"; }

 private:
  std::map<std::string, std::string> script_;
};

struct NoiseSpec {
  double drop_rate = 0.0;
  double retype_rate = 0.0;
  bool serial_numbers = false;   // prepend "1. ", "2. ", ...
  bool invert_order = false;     // "TYPE :: entity"
  bool markdown_bullets = false; // wrap lines in "- **...**"
};

// Deterministic corruption of the gold completion, for parser stress tests
// and known-F1 fixtures. Rates 0 with no mutations reproduces gold exactly.
inline std::string scripted_noise(const TaggedSentence& gold, const NoiseSpec& spec,
                                  std::uint64_t seed, const std::set<EntityType>& label_set) {
  detail::Rng rng(detail::mix_seed(seed, gold.id));
  std::vector<std::pair<std::string, std::string>> lines;  // (surface, type)
  for (const auto& sp : gold.spans) {
    if (rng.uniform() < spec.drop_rate) continue;
    std::string etype = sp.etype;
    if (rng.uniform() < spec.retype_rate && label_set.size() > 1) {
      std::vector<EntityType> others;
      for (const auto& l : label_set)
        if (l != etype) others.push_back(l);
      etype = others[rng.below(others.size())];
    }
    lines.emplace_back(gold.span_text(sp), etype);
  }
  if (lines.empty()) return "NONE";
  std::string out;
  for (size_t i = 0; i < lines.size(); ++i) {
    if (i) out += '\n';
    std::string body = spec.invert_order ? lines[i].second + " :: " + lines[i].first
                                         : lines[i].first + " :: " + lines[i].second;
    if (spec.markdown_bullets) body = "- **" + body + "**";
    if (spec.serial_numbers) body = std::to_string(i + 1) + ". " + body;
    out += body;
  }
  return out;
}

// Backend that applies scripted_noise to the gold sentence named by the prompt.
class NoisyGoldBackend : public CompletionBackend {
 public:
  NoisyGoldBackend(const std::vector<TaggedSentence>& gold, NoiseSpec spec, std::uint64_t seed,
                   std::set<EntityType> label_set)
      : spec_(spec), seed_(seed), label_set_(std::move(label_set)) {
    for (const auto& s : gold) by_text_[s.text()] = &gold_.emplace_back(s);
  }

  std::string complete(const std::string& prompt_text) override {
    auto it = by_text_.find(MockGoldBackend::extract_input_sentence(prompt_text));
    if (it == by_text_.end())
      throw std::runtime_error("scripted_noise: input sentence not in gold set");
    return scripted_noise(*it->second, spec_, seed_, label_set_);
  }

  std::string id() const override { return "scripted_noise"; }

 private:
  NoiseSpec spec_;
  std::uint64_t seed_;
  std::set<EntityType> label_set_;
  std::deque<TaggedSentence> gold_;
  std::map<std::string, const TaggedSentence*> by_text_;
};

std::unique_ptr<CompletionBackend> make_http_backend(const LlmConfig& cfg);  // llm_http.hpp

// Caching client: consult the on-disk cache first, otherwise call the backend
// and persist the record atomically (write-temp-then-rename).
class LlmClient {
 public:
  LlmClient(LlmConfig cfg, std::shared_ptr<CompletionBackend> backend,
            std::filesystem::path cache_dir)
      : cfg_(std::move(cfg)), backend_(std::move(backend)), cache_dir_(std::move(cache_dir)) {}

  CompletionRecord complete(const RenderedPrompt& prompt) {
    if (prompt.text.empty()) throw std::runtime_error("empty prompt");
    auto hash = prompt_hash(prompt.text, cfg_.model, cfg_.temperature);
    if (auto cached = lookup(hash)) {
      cached->from_cache = true;
      ++cache_hits_;
      return *cached;
    }
    auto start = std::chrono::steady_clock::now();
    CompletionRecord rec;
    rec.prompt_hash = hash;
    rec.completion = backend_->complete(prompt.text);
    rec.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                         std::chrono::steady_clock::now() - start)
                         .count();
    rec.backend_id = backend_->id();
    rec.timestamp = now_iso8601();
    store(rec);
    ++backend_calls_;
    return rec;
  }

  std::optional<CompletionRecord> lookup(const std::string& hash) const {
    std::ifstream in(record_path(hash));
    if (!in) return std::nullopt;
    nlohmann::json j;
    in >> j;
    CompletionRecord rec;
    rec.prompt_hash = j.at("prompt_hash").get<std::string>();
    rec.completion = j.at("completion").get<std::string>();
    rec.latency_ms = j.value("latency_ms", 0L);
    rec.backend_id = j.value("backend_id", "");
    rec.timestamp = j.value("timestamp", "");
    return rec;
  }

  void store(const CompletionRecord& rec) const {
    auto path = record_path(rec.prompt_hash);
    std::filesystem::create_directories(path.parent_path());
    nlohmann::json j = {{"prompt_hash", rec.prompt_hash},
                        {"completion", rec.completion},
                        {"latency_ms", rec.latency_ms},
                        {"backend_id", rec.backend_id},
                        {"timestamp", rec.timestamp}};
    std::ostringstream tmp_name;
    tmp_name << rec.prompt_hash << ".tmp." << std::this_thread::get_id();
    auto tmp = path.parent_path() / tmp_name.str();
    {
      std::ofstream out(tmp);
      out << j.dump(2) << '\n';
    }
    std::filesystem::rename(tmp, path);
  }

  long backend_calls() const { return backend_calls_; }
  long cache_hits() const { return cache_hits_; }

 private:
  std::filesystem::path record_path(const std::string& hash) const {
    return cache_dir_ / hash.substr(0, 2) / (hash + ".json");
  }

  static std::string now_iso8601() {
    auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof(buf), "%FT%TZ", &tm);
    return buf;
  }

  LlmConfig cfg_;
  std::shared_ptr<CompletionBackend> backend_;
  std::filesystem::path cache_dir_;
  std::atomic<long> backend_calls_{0};
  std::atomic<long> cache_hits_{0};
};

}  // namespace fsponer
