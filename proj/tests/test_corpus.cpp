#include <doctest.h>

#include <random>

#include "fsponer/corpus.hpp"

using namespace fsponer;

TEST_CASE("parse_conll decodes BIO spans") {
  auto corpus = parse_conll("HDD B-Component\nhead I-Component\n\nspins O\n");
  REQUIRE(corpus.sentences.size() == 2);
  CHECK(corpus.sentences[0].spans == std::vector<EntitySpan>{{0, 2, "Component"}});
  CHECK(corpus.sentences[1].spans.empty());
  CHECK(corpus.scheme == TagScheme::BIO);
}

TEST_CASE("parse_conll decodes BIOES single-token span") {
  auto corpus = parse_conll("cut S-OPER\n", SchemeChoice::BIOES);
  REQUIRE(corpus.sentences.size() == 1);
  CHECK(corpus.sentences[0].spans == std::vector<EntitySpan>{{0, 1, "OPER"}});
}

TEST_CASE("auto scheme selects BIOES iff E-/S- tags appear") {
  CHECK(parse_conll("a B-X\nb E-X\n").scheme == TagScheme::BIOES);
  CHECK(parse_conll("a B-X\nb I-X\n").scheme == TagScheme::BIO);
}

TEST_CASE("dangling I- is repaired as B- and counted") {
  auto corpus = parse_conll("x I-MATE\n");
  CHECK(corpus.sentences[0].spans == std::vector<EntitySpan>{{0, 1, "MATE"}});
  CHECK(corpus.repair_count == 1);
}

TEST_CASE("I- after a different open type opens a new span") {
  auto corpus = parse_conll("a B-X\nb I-Y\n");
  REQUIRE(corpus.sentences[0].spans.size() == 2);
  CHECK(corpus.sentences[0].spans[0] == EntitySpan{0, 1, "X"});
  CHECK(corpus.sentences[0].spans[1] == EntitySpan{1, 2, "Y"});
  CHECK(corpus.repair_count == 1);
}

TEST_CASE("parse errors") {
  CHECK_THROWS_WITH(parse_conll(""), "empty corpus");
  CHECK_THROWS_WITH(parse_conll("\n\n"), "empty corpus");
  CHECK_THROWS(parse_conll("a Q-MATE\n"));  // unknown prefix names the line
  try {
    parse_conll("a O\nb Z-X\n");
    FAIL("expected throw");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("parse_jsonl mirrors parse_conll semantics") {
  auto corpus = parse_jsonl(R"({"tokens":["laser"],"labels":["B-ENAT"]})" "\n");
  CHECK(corpus.sentences[0].spans == std::vector<EntitySpan>{{0, 1, "ENAT"}});

  CHECK_THROWS_WITH(parse_jsonl(R"({"tokens":["a","b"],"labels":["O"]})" "\n"),
                    "length mismatch line 1");

  auto two = parse_jsonl(R"({"tokens":["a"],"labels":["O"]})" "\n"
                         R"({"tokens":["b"],"labels":["O"]})" "\n");
  REQUIRE(two.sentences.size() == 2);
  CHECK(two.sentences[0].id == 0);
  CHECK(two.sentences[1].id == 1);
}

TEST_CASE("parse_conll and parse_jsonl agree on equivalent content") {
  std::string conll = "the O\nGMR B-Component\nhead I-Component\n\ncut S-OPER\ntool O\n";
  std::string jsonl =
      R"({"tokens":["the","GMR","head"],"labels":["O","B-Component","I-Component"]})" "\n"
      R"({"tokens":["cut","tool"],"labels":["S-OPER","O"]})" "\n";
  auto a = parse_conll(conll);
  auto b = parse_jsonl(jsonl);
  CHECK(a.sentences == b.sentences);
  CHECK(a.label_set == b.label_set);
  CHECK(a.scheme == b.scheme);
}

TEST_CASE("type_frequencies counts span occurrences") {
  auto corpus = parse_conll("a B-MATE\nb B-MATE\nc B-PRO\n");
  auto freq = type_frequencies(corpus);
  CHECK(freq == std::map<EntityType, int>{{"MATE", 2}, {"PRO", 1}});
  CHECK(type_frequencies(parse_conll("a O\n")).empty());
}

TEST_CASE("round-trip: spans -> tags -> spans for well-formed input") {
  for (auto scheme : {TagScheme::BIO, TagScheme::BIOES}) {
    std::vector<EntitySpan> spans = {{0, 2, "A"}, {3, 4, "B"}, {4, 6, "A"}};
    auto tags = spans_to_tags(spans, 7, scheme);
    int repairs = 0;
    CHECK(tags_to_spans(tags, scheme, &repairs) == spans);
    CHECK(repairs == 0);
    // and back to the same tag sequence
    CHECK(spans_to_tags(tags_to_spans(tags, scheme), 7, scheme) == tags);
  }
}

TEST_CASE("fuzz: repaired spans never overlap or escape bounds") {
  std::mt19937 rng(99);
  const std::vector<std::string> menu = {"O",   "B-X", "I-X", "B-Y", "I-Y",
                                         "E-X", "S-X", "E-Y", "S-Y"};
  for (int iter = 0; iter < 500; ++iter) {
    int len = 1 + rng() % 12;
    bool bioes = rng() % 2;
    std::vector<std::string> tags;
    for (int i = 0; i < len; ++i) tags.push_back(menu[rng() % (bioes ? 9 : 5)]);
    auto spans = tags_to_spans(tags, bioes ? TagScheme::BIOES : TagScheme::BIO);
    std::sort(spans.begin(), spans.end());
    int prev_end = 0;
    for (const auto& s : spans) {
      CHECK(s.start >= prev_end);
      CHECK(s.start < s.end);
      CHECK(s.end <= len);
      prev_end = s.end;
    }
  }
}
