#pragma once

// Shared test fixtures: deterministic synthetic corpora and a tiny RNG
// independent of the library's selector RNG.

#include <random>
#include <string>
#include <vector>

#include "fsponer/corpus.hpp"

namespace testutil {

// Deterministic synthetic corpus: every sentence gets 5-10 tokens drawn from
// a small vocabulary and 0-3 non-overlapping spans over the given types.
inline fsponer::Corpus make_corpus(int n_sentences, const std::vector<std::string>& types,
                                   unsigned seed = 1234, int min_spans = 0) {
  static const std::vector<std::string> words = {
      "laser",  "head",   "spindle", "bolt",  "weld",   "etch",  "film",  "sensor",
      "torque", "wafer",  "coil",    "motor", "flange", "anneal", "gmr",  "substrate",
      "drill",  "polish", "clamp",   "feed"};
  std::mt19937 rng(seed);
  fsponer::Corpus corpus;
  for (int i = 0; i < n_sentences; ++i) {
    fsponer::TaggedSentence s;
    s.id = i;
    int len = 5 + static_cast<int>(rng() % 6);
    // distinct words within a sentence keep surface-to-span alignment unambiguous
    std::vector<int> pick(words.size());
    for (size_t w = 0; w < words.size(); ++w) pick[w] = static_cast<int>(w);
    for (int t = 0; t < len; ++t) {
      std::swap(pick[t], pick[t + rng() % (words.size() - t)]);
      s.tokens.push_back(words[pick[t]] + std::to_string(i % 7));
    }
    int n_spans = min_spans + static_cast<int>(rng() % (4 - std::min(3, min_spans)));
    int pos = 0;
    for (int sp = 0; sp < n_spans && pos < len; ++sp) {
      int start = pos + static_cast<int>(rng() % 2);
      int span_len = 1 + static_cast<int>(rng() % 2);
      if (start + span_len > len) break;
      s.spans.push_back({start, start + span_len,
                         types[rng() % types.size()]});
      pos = start + span_len;
    }
    for (const auto& sp : s.spans) corpus.label_set.insert(sp.etype);
    corpus.sentences.push_back(std::move(s));
  }
  return corpus;
}

}  // namespace testutil
