#pragma once

// Stratified few-shot dataset construction: round-robin over entity types
// ordered most-frequent first, so rare types get equal representation.

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "fsponer/corpus.hpp"

namespace fsponer {

struct StratifiedDataset {
  std::vector<TaggedSentence> examples;  // selection order, ids renumbered pool-local
  std::vector<int> source_ids;           // original corpus ids, parallel to examples
  std::map<EntityType, int> per_type_counts;  // selection credits
  int target_size = 0;
};

inline StratifiedDataset build_stratified(const Corpus& corpus, int target_size = 300) {
  if (target_size < 1) throw std::runtime_error("target_size must be >= 1");
  auto freq = type_frequencies(corpus);
  if (freq.empty()) throw std::runtime_error("no entities to stratify");

  // Types descending by frequency, ties lexicographic.
  std::vector<EntityType> order;
  for (const auto& [t, _] : freq) order.push_back(t);
  std::sort(order.begin(), order.end(), [&](const EntityType& a, const EntityType& b) {
    if (freq[a] != freq[b]) return freq[a] > freq[b];
    return a < b;
  });

  // Candidate queue per type: sentences containing >= 1 span of it, id ascending.
  std::map<EntityType, std::deque<int>> queues;
  for (const auto& s : corpus.sentences) {
    std::set<EntityType> present;
    for (const auto& sp : s.spans) present.insert(sp.etype);
    for (const auto& t : present) queues[t].push_back(s.id);
  }

  StratifiedDataset ds;
  ds.target_size = target_size;
  std::set<int> taken;
  bool progress = true;
  while (static_cast<int>(ds.examples.size()) < target_size && progress) {
    progress = false;
    for (const auto& t : order) {
      if (static_cast<int>(ds.examples.size()) >= target_size) break;
      auto& q = queues[t];
      while (!q.empty() && taken.count(q.front())) q.pop_front();
      if (q.empty()) continue;
      int id = q.front();
      q.pop_front();
      taken.insert(id);
      TaggedSentence copy = corpus.sentences[id];
      copy.id = static_cast<int>(ds.examples.size());  // pool-local id
      ds.examples.push_back(std::move(copy));
      ds.source_ids.push_back(id);
      ++ds.per_type_counts[t];
      progress = true;
    }
  }
  return ds;
}

struct TypeCoverage {
  int selected_sentences = 0;  // pool sentences containing the type
  int span_count = 0;          // spans of the type inside the pool
};

inline std::map<EntityType, TypeCoverage> coverage_report(const StratifiedDataset& ds,
                                                          const Corpus& corpus) {
  std::map<EntityType, TypeCoverage> report;
  for (const auto& t : corpus.label_set) report[t];  // every type gets an entry
  for (const auto& s : ds.examples) {
    std::set<EntityType> present;
    for (const auto& sp : s.spans) {
      ++report[sp.etype].span_count;
      present.insert(sp.etype);
    }
    for (const auto& t : present) ++report[t].selected_sentences;
  }
  return report;
}

inline nlohmann::json coverage_to_json(const std::map<EntityType, TypeCoverage>& report) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [t, c] : report)
    out[t] = {{"selected_sentences", c.selected_sentences}, {"span_count", c.span_count}};
  return out;
}

// Pool serialization: JSON-lines with source ids, so runs are resumable from disk.
inline std::string stratified_to_jsonl(const StratifiedDataset& ds) {
  std::string out;
  for (size_t i = 0; i < ds.examples.size(); ++i) {
    const auto& s = ds.examples[i];
    nlohmann::json obj;
    obj["source_id"] = ds.source_ids[i];
    obj["tokens"] = s.tokens;
    obj["labels"] = spans_to_tags(s.spans, static_cast<int>(s.tokens.size()), TagScheme::BIO);
    out += obj.dump();
    out += '\n';
  }
  return out;
}

inline StratifiedDataset stratified_from_jsonl(const std::string& text) {
  StratifiedDataset ds;
  std::istringstream in(text);
  std::string line;
  int idx = 0;
  while (std::getline(in, line)) {
    if (detail::is_blank(line)) continue;
    auto obj = nlohmann::json::parse(line);
    TaggedSentence s;
    s.id = idx++;
    s.tokens = obj.at("tokens").get<std::vector<std::string>>();
    auto labels = obj.at("labels").get<std::vector<std::string>>();
    s.spans = tags_to_spans(labels, TagScheme::BIO);
    std::sort(s.spans.begin(), s.spans.end());
    ds.examples.push_back(std::move(s));
    ds.source_ids.push_back(obj.value("source_id", idx - 1));
  }
  ds.target_size = static_cast<int>(ds.examples.size());
  return ds;
}

}  // namespace fsponer
