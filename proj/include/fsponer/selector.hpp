#pragma once

// Few-shot example selection: random sampling, TF-IDF kNN, their interleave,
// and an optional embedding-provider-backed kNN. Chosen examples are ordered
// for the prompt with the most similar example rendered last.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <mutex>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "fsponer/stratify.hpp"
#include "fsponer/tfidf.hpp"

namespace fsponer {

enum class Strategy { Random, TfIdf, Combined, Embedding };

inline std::string strategy_name(Strategy s) {
  switch (s) {
    case Strategy::Random: return "random";
    case Strategy::TfIdf: return "tfidf";
    case Strategy::Combined: return "combined";
    case Strategy::Embedding: return "embedding";
  }
  return "?";
}

inline Strategy strategy_from_name(const std::string& name) {
  if (name == "random") return Strategy::Random;
  if (name == "tfidf") return Strategy::TfIdf;
  if (name == "combined") return Strategy::Combined;
  if (name == "embedding") return Strategy::Embedding;
  throw std::runtime_error("unknown strategy '" + name + "'");
}

struct SelectionConfig {
  Strategy strategy = Strategy::TfIdf;
  int k = 20;
  std::uint64_t seed = 0;
  int input_index = 0;  // position of the input sentence in the test stream
};

struct SelectionResult {
  std::vector<int> chosen;        // pool ids, prompt order (first rendered first)
  std::vector<double> scores;     // similarity, parallel to chosen (empty for random)
  Strategy strategy = Strategy::Random;
  bool clamped = false;           // k exceeded pool size
  bool degraded = false;          // all-OOV input, selection fell back to id order
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Per-input sub-seed so a run is reproducible without all inputs sharing one stream.
inline std::uint64_t mix_seed(std::uint64_t seed, int input_index) {
  return splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(input_index) + 1));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() { return state_ = splitmix64(state_); }
  // Bounded draw; modulo bias is irrelevant at pool scale.
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(next() % n); }
  double uniform() { return (next() >> 11) * (1.0 / 9007199254740992.0); }

 private:
  std::uint64_t state_;
};

// Partial Fisher-Yates: first k entries of a seeded permutation of 0..n-1.
inline std::vector<int> sample_without_replacement(int n, int k, Rng& rng) {
  std::vector<int> ids(n);
  for (int i = 0; i < n; ++i) ids[i] = i;
  k = std::min(k, n);
  for (int i = 0; i < k; ++i)
    std::swap(ids[i], ids[i + rng.below(n - i)]);
  ids.resize(k);
  return ids;
}

}  // namespace detail

inline SelectionResult select_random(const StratifiedDataset& pool, const SelectionConfig& cfg) {
  int n = static_cast<int>(pool.examples.size());
  if (n == 0) throw std::runtime_error("empty pool");
  SelectionResult result;
  result.strategy = Strategy::Random;
  result.clamped = cfg.k > n;
  detail::Rng rng(detail::mix_seed(cfg.seed, cfg.input_index));
  result.chosen = detail::sample_without_replacement(n, cfg.k, rng);
  return result;
}

namespace detail {

// Shared tail of the similarity-based strategies: keep the top k of a full
// descending ranking, then flip to ascending so the best example renders last.
inline SelectionResult order_by_similarity(std::vector<std::pair<int, double>> ranked, int k,
                                           Strategy strategy, bool clamped) {
  if (static_cast<int>(ranked.size()) > k) ranked.resize(k);
  std::reverse(ranked.begin(), ranked.end());
  SelectionResult result;
  result.strategy = strategy;
  result.clamped = clamped;
  for (const auto& [id, score] : ranked) {
    result.chosen.push_back(id);
    result.scores.push_back(score);
  }
  return result;
}

}  // namespace detail

inline SelectionResult select_tfidf(const StratifiedDataset& pool, const TfIdfModel& model,
                                    const TaggedSentence& input, const SelectionConfig& cfg) {
  int n = static_cast<int>(pool.examples.size());
  if (n == 0) throw std::runtime_error("empty pool");
  auto query = transform(model, input.text());
  auto ranked = top_k(model, query, std::min(cfg.k, n));
  auto result = detail::order_by_similarity(std::move(ranked), cfg.k, Strategy::TfIdf, cfg.k > n);
  result.degraded = query.entries.empty();
  return result;
}

// Alternate between the TF-IDF ranking and a seeded random permutation,
// skipping already-chosen ids without consuming the other list's turn.
inline SelectionResult select_combined(const StratifiedDataset& pool, const TfIdfModel& model,
                                       const TaggedSentence& input, const SelectionConfig& cfg) {
  int n = static_cast<int>(pool.examples.size());
  if (n == 0) throw std::runtime_error("empty pool");
  auto query = transform(model, input.text());
  auto ranked = top_k(model, query, n);  // full descending ranking
  std::vector<double> sim(n, 0.0);
  for (const auto& [id, score] : ranked) sim[id] = score;

  detail::Rng rng(detail::mix_seed(cfg.seed, cfg.input_index));
  auto random_list = detail::sample_without_replacement(n, n, rng);

  int k = std::min(cfg.k, n);
  std::vector<int> chosen;
  std::set<int> used;
  size_t ti = 0, ri = 0;
  bool turn_tfidf = true;
  while (static_cast<int>(chosen.size()) < k && (ti < ranked.size() || ri < random_list.size())) {
    auto take = [&](size_t& i, auto get) {
      while (i < static_cast<size_t>(n)) {
        int id = get(i++);
        if (used.insert(id).second) {
          chosen.push_back(id);
          return true;
        }
      }
      return false;
    };
    bool took;
    if (turn_tfidf)
      took = take(ti, [&](size_t i) { return ranked[i].first; });
    else
      took = take(ri, [&](size_t i) { return random_list[i]; });
    if (!took && ti >= static_cast<size_t>(n) && ri >= static_cast<size_t>(n)) break;
    turn_tfidf = !turn_tfidf;
  }

  // Final prompt order: ascending TF-IDF similarity of the chosen set.
  std::sort(chosen.begin(), chosen.end(), [&](int a, int b) {
    if (sim[a] != sim[b]) return sim[a] < sim[b];
    return a > b;  // mirrors descending-rank tie-break (lower id more similar)
  });
  SelectionResult result;
  result.strategy = Strategy::Combined;
  result.clamped = cfg.k > n;
  result.degraded = query.entries.empty();
  result.chosen = std::move(chosen);
  for (int id : result.chosen) result.scores.push_back(sim[id]);
  return result;
}

// Embedding backend contract: fixed-dimension vector per text. Throws on failure.
using EmbeddingProvider = std::function<std::vector<double>(const std::string&)>;

class EmbeddingCache {
 public:
  explicit EmbeddingCache(EmbeddingProvider provider, int max_retries = 3)
      : provider_(std::move(provider)), max_retries_(max_retries) {}

  std::vector<double> get(const std::string& text) {
    auto key = fnv1a(text);
    {
      std::lock_guard lock(mu_);
      auto it = cache_.find(key);
      if (it != cache_.end()) return it->second;
    }
    std::string last_error;
    for (int attempt = 0; attempt < max_retries_; ++attempt) {
      try {
        auto v = provider_(text);
        double n = 0;
        for (double x : v) n += x * x;
        n = std::sqrt(n);
        if (n > 0)
          for (double& x : v) x /= n;
        std::lock_guard lock(mu_);
        cache_[key] = v;
        return v;
      } catch (const std::exception& e) {
        last_error = e.what();
      }
    }
    throw std::runtime_error("embedding provider failed after " +
                             std::to_string(max_retries_) + " attempts: " + last_error);
  }

 private:
  EmbeddingProvider provider_;
  int max_retries_;
  std::mutex mu_;
  std::unordered_map<std::uint64_t, std::vector<double>> cache_;
};

inline SelectionResult select_embedding(const StratifiedDataset& pool, EmbeddingCache& cache,
                                        const TaggedSentence& input, const SelectionConfig& cfg) {
  int n = static_cast<int>(pool.examples.size());
  if (n == 0) throw std::runtime_error("empty pool");
  auto q = cache.get(input.text());
  std::vector<std::pair<int, double>> ranked;
  for (int i = 0; i < n; ++i) {
    auto v = cache.get(pool.examples[i].text());
    double s = 0;
    for (size_t d = 0; d < std::min(q.size(), v.size()); ++d) s += q[d] * v[d];
    ranked.emplace_back(i, s);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return detail::order_by_similarity(std::move(ranked), std::min(cfg.k, n), Strategy::Embedding,
                                     cfg.k > n);
}

inline nlohmann::json selection_to_json(const SelectionResult& r, int input_index) {
  nlohmann::json j;
  j["input_index"] = input_index;
  j["strategy"] = strategy_name(r.strategy);
  j["chosen"] = r.chosen;
  if (!r.scores.empty()) j["scores"] = r.scores;
  j["clamped"] = r.clamped;
  j["degraded"] = r.degraded;
  return j;
}

}  // namespace fsponer
