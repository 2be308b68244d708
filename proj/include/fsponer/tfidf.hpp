#pragma once

// TF-IDF vectorization of sentence text and exact cosine kNN over the
// few-shot pool. N pool documents by M vocabulary terms, rows l2-normalized.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fsponer/corpus.hpp"

namespace fsponer {

struct SparseVector {
  std::vector<std::pair<int, double>> entries;  // term index ascending

  double norm() const {
    double s = 0;
    for (const auto& [_, w] : entries) s += w * w;
    return std::sqrt(s);
  }

  void normalize() {
    double n = norm();
    if (n == 0) return;
    for (auto& [_, w] : entries) w /= n;
  }
};

inline double dot(const SparseVector& a, const SparseVector& b) {
  double s = 0;
  size_t i = 0, j = 0;
  while (i < a.entries.size() && j < b.entries.size()) {
    if (a.entries[i].first < b.entries[j].first) {
      ++i;
    } else if (a.entries[i].first > b.entries[j].first) {
      ++j;
    } else {
      s += a.entries[i].second * b.entries[j].second;
      ++i;
      ++j;
    }
  }
  return s;
}

// Vectors are already unit-norm (or zero); cosine is just the dot product.
inline double cosine(const SparseVector& a, const SparseVector& b) { return dot(a, b); }

// Lowercase + split on non-alphanumeric. Non-ASCII UTF-8 bytes are treated as
// word characters and passed through unchanged.
inline std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> terms;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c) || c >= 0x80) {
      cur += static_cast<char>(std::tolower(c));
    } else if (!cur.empty()) {
      terms.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) terms.push_back(std::move(cur));
  return terms;
}

struct TfIdfModel {
  std::map<std::string, int> vocabulary;  // term -> column index
  std::vector<int> doc_freq;              // per column
  std::vector<double> idf;                // per column
  int n_docs = 0;
  std::vector<SparseVector> doc_matrix;   // one row per pool document
  std::vector<int> doc_ids;               // pool ids, row-parallel
};

// tf = raw count, idf = ln((1+N)/(1+df)) + 1, rows l2-normalized.
inline TfIdfModel fit(const std::vector<TaggedSentence>& sentences) {
  if (sentences.empty()) throw std::runtime_error("cannot fit on empty pool");
  TfIdfModel model;
  model.n_docs = static_cast<int>(sentences.size());

  std::vector<std::map<std::string, int>> counts(sentences.size());
  for (size_t d = 0; d < sentences.size(); ++d) {
    for (const auto& t : tokenize(sentences[d].text())) ++counts[d][t];
    for (const auto& [term, _] : counts[d]) {
      auto [it, inserted] = model.vocabulary.try_emplace(
          term, static_cast<int>(model.vocabulary.size()));
      (void)it;
    }
  }
  if (model.vocabulary.empty()) throw std::runtime_error("empty vocabulary");

  // Re-key columns so indices follow sorted term order (map iteration order).
  int col = 0;
  for (auto& [term, index] : model.vocabulary) index = col++;

  model.doc_freq.assign(model.vocabulary.size(), 0);
  for (const auto& c : counts)
    for (const auto& [term, _] : c) ++model.doc_freq[model.vocabulary[term]];

  model.idf.resize(model.vocabulary.size());
  for (size_t i = 0; i < model.idf.size(); ++i)
    model.idf[i] = std::log((1.0 + model.n_docs) / (1.0 + model.doc_freq[i])) + 1.0;

  for (size_t d = 0; d < sentences.size(); ++d) {
    SparseVector row;
    for (const auto& [term, tf] : counts[d])
      row.entries.emplace_back(model.vocabulary[term], tf * model.idf[model.vocabulary[term]]);
    std::sort(row.entries.begin(), row.entries.end());
    row.normalize();
    model.doc_matrix.push_back(std::move(row));
    model.doc_ids.push_back(sentences[d].id);
  }
  return model;
}

// Out-of-vocabulary terms are dropped; all-OOV text maps to the zero vector.
inline SparseVector transform(const TfIdfModel& model, const std::string& text) {
  std::map<int, int> counts;
  for (const auto& t : tokenize(text)) {
    auto it = model.vocabulary.find(t);
    if (it != model.vocabulary.end()) ++counts[it->second];
  }
  SparseVector v;
  for (const auto& [index, tf] : counts)
    v.entries.emplace_back(index, tf * model.idf[index]);
  v.normalize();
  return v;
}

// Exhaustive scan; score descending, ties by row index ascending.
inline std::vector<std::pair<int, double>> top_k(const TfIdfModel& model,
                                                 const SparseVector& query, int k) {
  if (k < 1) throw std::runtime_error("k must be >= 1");
  std::vector<std::pair<int, double>> scored;
  scored.reserve(model.doc_matrix.size());
  for (size_t i = 0; i < model.doc_matrix.size(); ++i)
    scored.emplace_back(static_cast<int>(i), cosine(query, model.doc_matrix[i]));
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (static_cast<int>(scored.size()) > k) scored.resize(k);
  return scored;
}

inline nlohmann::json tfidf_to_json(const TfIdfModel& model) {
  nlohmann::json j;
  j["n_docs"] = model.n_docs;
  j["vocabulary"] = model.vocabulary;
  j["doc_freq"] = model.doc_freq;
  j["idf"] = model.idf;
  j["doc_ids"] = model.doc_ids;
  auto rows = nlohmann::json::array();
  for (const auto& row : model.doc_matrix) {
    auto r = nlohmann::json::array();
    for (const auto& [index, w] : row.entries) r.push_back({index, w});
    rows.push_back(std::move(r));
  }
  j["doc_matrix"] = std::move(rows);
  return j;
}

inline TfIdfModel tfidf_from_json(const nlohmann::json& j) {
  TfIdfModel model;
  model.n_docs = j.at("n_docs").get<int>();
  model.vocabulary = j.at("vocabulary").get<std::map<std::string, int>>();
  model.doc_freq = j.at("doc_freq").get<std::vector<int>>();
  model.idf = j.at("idf").get<std::vector<double>>();
  model.doc_ids = j.at("doc_ids").get<std::vector<int>>();
  for (const auto& r : j.at("doc_matrix")) {
    SparseVector row;
    for (const auto& e : r) row.entries.emplace_back(e[0].get<int>(), e[1].get<double>());
    model.doc_matrix.push_back(std::move(row));
  }
  return model;
}

// FNV-1a over pool text, for keying the model cache file.
inline std::uint64_t fnv1a(const std::string& data, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string pool_content_hash(const std::vector<TaggedSentence>& sentences) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& s : sentences) {
    h = fnv1a(s.text(), h);
    h = fnv1a("\n", h);
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace fsponer
