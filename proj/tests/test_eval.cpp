#include <doctest.h>

#include <random>

#include "fsponer/eval.hpp"
#include "helpers.hpp"

using namespace fsponer;

namespace {

ParseReport report_of(const std::vector<EntitySpan>& spans) {
  ParseReport r;
  for (const auto& sp : spans) r.entities.push_back({"x", sp.etype, sp});
  return r;
}

// Independent per-span matcher: greedy removal from a multiset of gold spans.
std::map<EntityType, MatchCounts> brute_match(std::vector<EntitySpan> pred,
                                              std::vector<EntitySpan> gold) {
  std::map<EntityType, MatchCounts> counts;
  std::multiset<EntitySpan> pool(gold.begin(), gold.end());
  for (const auto& p : pred) {
    auto it = pool.find(p);
    if (it != pool.end()) {
      pool.erase(it);
      ++counts[p.etype].tp;
    } else {
      ++counts[p.etype].fp;
    }
  }
  for (const auto& g : pool) ++counts[g.etype].fn;
  return counts;
}

}  // namespace

TEST_CASE("exact match basics") {
  auto c = match_spans({{0, 2, "PART"}}, {{0, 2, "PART"}});
  CHECK(c["PART"].tp == 1);
  CHECK(c["PART"].fp == 0);
  CHECK(c["PART"].fn == 0);
}

TEST_CASE("boundary error is fp plus fn") {
  auto c = match_spans({{0, 1, "PART"}}, {{0, 2, "PART"}});
  CHECK(c["PART"].tp == 0);
  CHECK(c["PART"].fp == 1);
  CHECK(c["PART"].fn == 1);
}

TEST_CASE("wrong type splits across both types") {
  auto c = match_spans({{0, 2, "TOOL"}}, {{0, 2, "PART"}});
  CHECK(c["TOOL"].fp == 1);
  CHECK(c["PART"].fn == 1);
}

TEST_CASE("each gold span matches at most one prediction") {
  auto c = match_spans({{0, 1, "A"}, {0, 1, "A"}}, {{0, 1, "A"}});
  CHECK(c["A"].tp == 1);
  CHECK(c["A"].fp == 1);
}

TEST_CASE("perfect predictions score weighted_f1 = 1") {
  auto corpus = testutil::make_corpus(30, {"A", "B"}, 5, 1);
  std::vector<ParseReport> preds;
  for (const auto& s : corpus.sentences) preds.push_back(report_of(s.spans));
  auto r = evaluate(preds, corpus.sentences);
  CHECK(r.weighted_f1 == 1.0);
  CHECK(r.micro_f1 == 1.0);
  CHECK(r.hallucination_rate == 0.0);
}

TEST_CASE("two-type weighted F1 hand value") {
  // type A: support 3, perfect; type B: support 1, fully missed
  std::vector<TaggedSentence> gold(2);
  gold[0].tokens = {"a", "b", "c", "d"};
  gold[0].spans = {{0, 1, "A"}, {1, 2, "A"}, {2, 3, "A"}};
  gold[1].tokens = {"e"};
  gold[1].spans = {{0, 1, "B"}};
  std::vector<ParseReport> preds = {report_of(gold[0].spans), report_of({})};
  auto r = evaluate(preds, gold);
  CHECK(r.weighted_f1 == 0.75);
}

TEST_CASE("empty predictions against nonzero gold") {
  auto corpus = testutil::make_corpus(10, {"A"}, 9, 1);
  std::vector<ParseReport> preds(corpus.sentences.size());
  auto r = evaluate(preds, corpus.sentences);
  CHECK(r.weighted_f1 == 0.0);
  for (const auto& m : r.per_type) CHECK(m.recall == 0.0);
}

TEST_CASE("length mismatch is an error") {
  auto corpus = testutil::make_corpus(3, {"A"}, 9, 1);
  CHECK_THROWS(evaluate({}, corpus.sentences));
}

TEST_CASE("hallucinated entities are excluded from span scoring but counted") {
  std::vector<TaggedSentence> gold(1);
  gold[0].tokens = {"a"};
  gold[0].spans = {{0, 1, "A"}};
  ParseReport pr;
  pr.entities.push_back({"a", "A", EntitySpan{0, 1, "A"}});
  pr.entities.push_back({"ghost", "A", std::nullopt});
  pr.hallucinated_count = 1;
  auto r = evaluate({pr}, gold);
  CHECK(r.weighted_f1 == 1.0);  // ghost not scored as fp
  CHECK(r.hallucinated == 1);
  CHECK(r.total_predicted == 2);
  CHECK(r.hallucination_rate == 0.5);
}

TEST_CASE("weighted F1 lies between per-type extremes") {
  std::mt19937 rng(404);
  for (int iter = 0; iter < 50; ++iter) {
    auto corpus = testutil::make_corpus(12, {"A", "B", "C"}, 1000 + iter, 1);
    std::vector<ParseReport> preds;
    for (const auto& s : corpus.sentences) {
      std::vector<EntitySpan> kept;
      for (const auto& sp : s.spans)
        if (rng() % 3) kept.push_back(sp);
      preds.push_back(report_of(kept));
    }
    auto r = evaluate(preds, corpus.sentences);
    double lo = 1.0, hi = 0.0;
    for (const auto& m : r.per_type) {
      lo = std::min(lo, m.f1);
      hi = std::max(hi, m.f1);
    }
    CHECK(r.weighted_f1 >= lo - 1e-12);
    CHECK(r.weighted_f1 <= hi + 1e-12);
  }
}

TEST_CASE("sentence order permutation leaves the report unchanged") {
  auto corpus = testutil::make_corpus(20, {"A", "B"}, 21, 1);
  std::vector<ParseReport> preds;
  std::mt19937 rng(8);
  for (const auto& s : corpus.sentences) {
    std::vector<EntitySpan> kept;
    for (const auto& sp : s.spans)
      if (rng() % 2) kept.push_back(sp);
    preds.push_back(report_of(kept));
  }
  auto base = evaluate(preds, corpus.sentences);

  std::vector<int> order(corpus.sentences.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<ParseReport> p2;
  std::vector<TaggedSentence> g2;
  for (int i : order) {
    p2.push_back(preds[i]);
    g2.push_back(corpus.sentences[i]);
  }
  auto shuffled = evaluate(p2, g2);
  CHECK(shuffled.weighted_f1 == doctest::Approx(base.weighted_f1).epsilon(1e-15));
  CHECK(shuffled.micro_f1 == doctest::Approx(base.micro_f1).epsilon(1e-15));
  CHECK(eval_to_json(shuffled)["per_type"] == eval_to_json(base)["per_type"]);
}

TEST_CASE("micro F1 recomputed from per-type sums agrees") {
  auto corpus = testutil::make_corpus(25, {"A", "B", "C"}, 31, 1);
  std::vector<ParseReport> preds;
  std::mt19937 rng(3);
  for (const auto& s : corpus.sentences) {
    std::vector<EntitySpan> noisy;
    for (const auto& sp : s.spans)
      if (rng() % 4) noisy.push_back(sp);
    if (rng() % 3 == 0 && !s.tokens.empty()) noisy.push_back({0, 1, "A"});
    std::sort(noisy.begin(), noisy.end());
    noisy.erase(std::unique(noisy.begin(), noisy.end()), noisy.end());
    preds.push_back(report_of(noisy));
  }
  auto r = evaluate(preds, corpus.sentences);
  int tp = 0, fp = 0, fn = 0;
  for (const auto& m : r.per_type) {
    tp += m.tp;
    fp += m.fp;
    fn += m.fn;
  }
  double p = tp + fp > 0 ? double(tp) / (tp + fp) : 0;
  double rec = tp + fn > 0 ? double(tp) / (tp + fn) : 0;
  double micro = p + rec > 0 ? 2 * p * rec / (p + rec) : 0;
  CHECK(std::abs(r.micro_f1 - micro) <= 1e-12);
}

TEST_CASE("match_spans agrees with a brute-force matcher on random instances") {
  std::mt19937 rng(606);
  std::vector<std::string> types = {"A", "B"};
  for (int iter = 0; iter < 300; ++iter) {
    auto make = [&] {
      std::vector<EntitySpan> spans;
      int n = rng() % 4;
      for (int i = 0; i < n; ++i) {
        int start = rng() % 5;
        spans.push_back({start, start + 1 + static_cast<int>(rng() % 2),
                         types[rng() % 2]});
      }
      return spans;
    };
    auto pred = make();
    auto gold = make();
    auto got = match_spans(pred, gold);
    auto want = brute_match(pred, gold);
    for (const auto& [t, c] : want) {
      CHECK(got[t].tp == c.tp);
      CHECK(got[t].fp == c.fp);
      CHECK(got[t].fn == c.fn);
    }
  }
}
