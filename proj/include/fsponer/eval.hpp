#pragma once

// Span-level NER scoring: exact (start, end, type) matching, per-type
// precision/recall/F1, support-weighted F1, micro F1, hallucination rate.

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fsponer/corpus.hpp"
#include "fsponer/parse.hpp"

namespace fsponer {

struct MatchCounts {
  int tp = 0, fp = 0, fn = 0;
};

// Exact match: a prediction is a TP iff (start, end, etype) equals a gold
// span; each gold span matches at most one prediction.
inline std::map<EntityType, MatchCounts> match_spans(const std::vector<EntitySpan>& pred,
                                                     const std::vector<EntitySpan>& gold) {
  std::map<EntityType, MatchCounts> counts;
  std::vector<bool> gold_used(gold.size(), false);
  for (const auto& p : pred) {
    bool matched = false;
    for (size_t g = 0; g < gold.size(); ++g) {
      if (!gold_used[g] && gold[g] == p) {
        gold_used[g] = true;
        matched = true;
        break;
      }
    }
    if (matched)
      ++counts[p.etype].tp;
    else
      ++counts[p.etype].fp;
  }
  for (size_t g = 0; g < gold.size(); ++g)
    if (!gold_used[g]) ++counts[gold[g].etype].fn;
  return counts;
}

struct TypeMetrics {
  EntityType etype;
  int tp = 0, fp = 0, fn = 0;
  double precision = 0, recall = 0, f1 = 0;
  int support = 0;  // gold span count
};

struct EvalReport {
  std::vector<TypeMetrics> per_type;  // sorted by type name
  double weighted_f1 = 0;  // support-weighted mean of per-type F1
  double micro_f1 = 0;     // from pooled tp/fp/fn
  double hallucination_rate = 0;
  int hallucinated = 0;
  int total_predicted = 0;
  int n_sentences = 0;
};

inline EvalReport evaluate(const std::vector<ParseReport>& preds,
                           const std::vector<TaggedSentence>& gold) {
  if (preds.size() != gold.size())
    throw std::runtime_error("prediction/gold length mismatch: " +
                             std::to_string(preds.size()) + " vs " +
                             std::to_string(gold.size()));
  EvalReport report;
  report.n_sentences = static_cast<int>(gold.size());
  std::map<EntityType, MatchCounts> totals;
  for (size_t i = 0; i < gold.size(); ++i) {
    std::vector<EntitySpan> spans;
    for (const auto& e : preds[i].entities) {
      ++report.total_predicted;
      if (e.aligned)
        spans.push_back(*e.aligned);
      else
        ++report.hallucinated;  // excluded from span scoring
    }
    for (const auto& [t, c] : match_spans(spans, gold[i].spans)) {
      totals[t].tp += c.tp;
      totals[t].fp += c.fp;
      totals[t].fn += c.fn;
    }
  }

  int pooled_tp = 0, pooled_fp = 0, pooled_fn = 0;
  double weighted_sum = 0;
  int support_sum = 0;
  for (const auto& [t, c] : totals) {
    TypeMetrics m;
    m.etype = t;
    m.tp = c.tp;
    m.fp = c.fp;
    m.fn = c.fn;
    m.support = c.tp + c.fn;
    m.precision = c.tp + c.fp > 0 ? static_cast<double>(c.tp) / (c.tp + c.fp) : 0.0;
    m.recall = c.tp + c.fn > 0 ? static_cast<double>(c.tp) / (c.tp + c.fn) : 0.0;
    m.f1 = m.precision + m.recall > 0
               ? 2 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    pooled_tp += c.tp;
    pooled_fp += c.fp;
    pooled_fn += c.fn;
    weighted_sum += m.support * m.f1;
    support_sum += m.support;
    report.per_type.push_back(std::move(m));
  }
  report.weighted_f1 = support_sum > 0 ? weighted_sum / support_sum : 0.0;
  double p = pooled_tp + pooled_fp > 0 ? static_cast<double>(pooled_tp) / (pooled_tp + pooled_fp)
                                       : 0.0;
  double r = pooled_tp + pooled_fn > 0 ? static_cast<double>(pooled_tp) / (pooled_tp + pooled_fn)
                                       : 0.0;
  report.micro_f1 = p + r > 0 ? 2 * p * r / (p + r) : 0.0;
  report.hallucination_rate =
      report.total_predicted > 0
          ? static_cast<double>(report.hallucinated) / report.total_predicted
          : 0.0;
  return report;
}

inline nlohmann::json eval_to_json(const EvalReport& r) {
  nlohmann::json per_type = nlohmann::json::array();
  for (const auto& m : r.per_type)
    per_type.push_back({{"type", m.etype},
                        {"tp", m.tp},
                        {"fp", m.fp},
                        {"fn", m.fn},
                        {"support", m.support},
                        {"precision", m.precision},
                        {"recall", m.recall},
                        {"f1", m.f1}});
  return {{"per_type", per_type},
          {"weighted_f1", r.weighted_f1},
          {"micro_f1", r.micro_f1},
          {"hallucination_rate", r.hallucination_rate},
          {"hallucinated", r.hallucinated},
          {"total_predicted", r.total_predicted},
          {"n_sentences", r.n_sentences}};
}

}  // namespace fsponer
