#pragma once

// Corpus ingestion: BIO/BIOES tagged text (CoNLL-style or JSON-lines) decoded
// into sentences with validated, non-overlapping entity spans.

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace fsponer {

using EntityType = std::string;

struct EntitySpan {
  int start = 0;  // token index, inclusive
  int end = 0;    // token index, exclusive
  EntityType etype;

  friend bool operator==(const EntitySpan&, const EntitySpan&) = default;
  friend auto operator<=>(const EntitySpan&, const EntitySpan&) = default;
};

struct TaggedSentence {
  int id = 0;
  std::vector<std::string> tokens;
  std::vector<EntitySpan> spans;  // sorted by start, non-overlapping

  std::string text() const {
    std::string out;
    for (size_t i = 0; i < tokens.size(); ++i) {
      if (i) out += ' ';
      out += tokens[i];
    }
    return out;
  }

  std::string span_text(const EntitySpan& s) const {
    std::string out;
    for (int i = s.start; i < s.end; ++i) {
      if (i > s.start) out += ' ';
      out += tokens[i];
    }
    return out;
  }

  friend bool operator==(const TaggedSentence&, const TaggedSentence&) = default;
};

enum class TagScheme { BIO, BIOES };

struct Corpus {
  std::vector<TaggedSentence> sentences;
  std::set<EntityType> label_set;
  TagScheme scheme = TagScheme::BIO;
  int repair_count = 0;  // malformed I-/E- transitions repaired at parse time
};

namespace detail {

inline bool is_blank(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

}  // namespace detail

// Decode one sentence's tag sequence into spans. Malformed transitions
// (I-X with no open X, dangling B- in BIOES) are repaired by opening or
// closing a span; each repair is counted.
inline std::vector<EntitySpan> tags_to_spans(const std::vector<std::string>& tags,
                                             TagScheme scheme, int* repairs = nullptr) {
  std::vector<EntitySpan> spans;
  int open_start = -1;
  std::string open_type;
  int local_repairs = 0;

  auto close_open = [&](int end) {
    if (open_start >= 0) {
      spans.push_back({open_start, end, open_type});
      open_start = -1;
      open_type.clear();
    }
  };

  for (int i = 0; i < static_cast<int>(tags.size()); ++i) {
    const std::string& tag = tags[i];
    if (tag == "O") {
      close_open(i);
      continue;
    }
    char prefix = tag[0];
    std::string etype = tag.size() > 2 && tag[1] == '-' ? tag.substr(2) : "";
    if (etype.empty()) throw std::runtime_error("malformed tag '" + tag + "'");

    switch (prefix) {
      case 'B':
        close_open(i);
        open_start = i;
        open_type = etype;
        if (scheme == TagScheme::BIOES) {
          // B- must be closed by E-; an unterminated run is repaired below.
        }
        break;
      case 'I':
        if (open_start >= 0 && open_type == etype) {
          // continue
        } else {
          // I- with no matching open span: treat as B-
          close_open(i);
          open_start = i;
          open_type = etype;
          ++local_repairs;
        }
        break;
      case 'E':
        if (scheme != TagScheme::BIOES) throw std::runtime_error("E- tag outside BIOES");
        if (open_start >= 0 && open_type == etype) {
          close_open(i + 1);
        } else {
          close_open(i);
          spans.push_back({i, i + 1, etype});
          ++local_repairs;
        }
        break;
      case 'S':
        if (scheme != TagScheme::BIOES) throw std::runtime_error("S- tag outside BIOES");
        close_open(i);
        spans.push_back({i, i + 1, etype});
        break;
      default:
        throw std::runtime_error("unknown tag prefix '" + tag + "'");
    }
  }
  if (open_start >= 0) {
    if (scheme == TagScheme::BIOES) ++local_repairs;  // missing E-
    close_open(static_cast<int>(tags.size()));
  }
  if (repairs) *repairs += local_repairs;
  return spans;
}

// Inverse of tags_to_spans for well-formed input.
inline std::vector<std::string> spans_to_tags(const std::vector<EntitySpan>& spans,
                                              int n_tokens, TagScheme scheme) {
  std::vector<std::string> tags(n_tokens, "O");
  for (const auto& s : spans) {
    if (scheme == TagScheme::BIO) {
      tags[s.start] = "B-" + s.etype;
      for (int i = s.start + 1; i < s.end; ++i) tags[i] = "I-" + s.etype;
    } else {
      if (s.end - s.start == 1) {
        tags[s.start] = "S-" + s.etype;
      } else {
        tags[s.start] = "B-" + s.etype;
        for (int i = s.start + 1; i < s.end - 1; ++i) tags[i] = "I-" + s.etype;
        tags[s.end - 1] = "E-" + s.etype;
      }
    }
  }
  return tags;
}

enum class SchemeChoice { BIO, BIOES, Auto };

namespace detail {

inline TagScheme resolve_scheme(SchemeChoice choice,
                                const std::vector<std::vector<std::string>>& tag_lists) {
  if (choice == SchemeChoice::BIO) return TagScheme::BIO;
  if (choice == SchemeChoice::BIOES) return TagScheme::BIOES;
  for (const auto& tags : tag_lists)
    for (const auto& t : tags)
      if (t.size() > 1 && (t[0] == 'E' || t[0] == 'S') && t[1] == '-')
        return TagScheme::BIOES;
  return TagScheme::BIO;
}

inline void validate_tag(const std::string& tag, int line_no) {
  if (tag == "O") return;
  static const std::string prefixes = "BIES";
  if (tag.size() < 3 || tag[1] != '-' || prefixes.find(tag[0]) == std::string::npos)
    throw std::runtime_error("unknown tag prefix at line " + std::to_string(line_no) +
                             ": '" + tag + "'");
}

inline Corpus assemble(std::vector<std::vector<std::string>> token_lists,
                       std::vector<std::vector<std::string>> tag_lists,
                       SchemeChoice choice) {
  if (token_lists.empty()) throw std::runtime_error("empty corpus");
  Corpus corpus;
  corpus.scheme = resolve_scheme(choice, tag_lists);
  for (size_t i = 0; i < token_lists.size(); ++i) {
    TaggedSentence s;
    s.id = static_cast<int>(i);
    s.tokens = std::move(token_lists[i]);
    s.spans = tags_to_spans(tag_lists[i], corpus.scheme, &corpus.repair_count);
    std::sort(s.spans.begin(), s.spans.end());
    for (const auto& sp : s.spans) corpus.label_set.insert(sp.etype);
    corpus.sentences.push_back(std::move(s));
  }
  return corpus;
}

}  // namespace detail

// Token-per-line "token<ws>tag" with blank-line sentence boundaries.
inline Corpus parse_conll(const std::string& text, SchemeChoice choice = SchemeChoice::Auto) {
  std::vector<std::vector<std::string>> token_lists, tag_lists;
  std::vector<std::string> tokens, tags;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  auto flush = [&] {
    if (!tokens.empty()) {
      token_lists.push_back(std::move(tokens));
      tag_lists.push_back(std::move(tags));
      tokens.clear();
      tags.clear();
    }
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::is_blank(line)) {
      flush();
      continue;
    }
    std::istringstream fields(line);
    std::string token, tag, extra;
    fields >> token;
    while (fields >> extra) tag = extra;  // last column is the tag
    if (tag.empty())
      throw std::runtime_error("missing tag at line " + std::to_string(line_no));
    detail::validate_tag(tag, line_no);
    tokens.push_back(token);
    tags.push_back(tag);
  }
  flush();
  return detail::assemble(std::move(token_lists), std::move(tag_lists), choice);
}

// One JSON object per line: {"tokens": [...], "labels": [...]}.
inline Corpus parse_jsonl(const std::string& text, SchemeChoice choice = SchemeChoice::Auto) {
  std::vector<std::vector<std::string>> token_lists, tag_lists;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::is_blank(line)) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw std::runtime_error("invalid JSON at line " + std::to_string(line_no) + ": " +
                               e.what());
    }
    auto tokens = obj.at("tokens").get<std::vector<std::string>>();
    auto labels = obj.at("labels").get<std::vector<std::string>>();
    if (tokens.size() != labels.size())
      throw std::runtime_error("length mismatch line " + std::to_string(line_no));
    for (const auto& t : labels) detail::validate_tag(t, line_no);
    token_lists.push_back(std::move(tokens));
    tag_lists.push_back(std::move(labels));
  }
  return detail::assemble(std::move(token_lists), std::move(tag_lists), choice);
}

// Span occurrences per type (not sentence containment).
inline std::map<EntityType, int> type_frequencies(const Corpus& corpus) {
  std::map<EntityType, int> freq;
  for (const auto& s : corpus.sentences)
    for (const auto& sp : s.spans) ++freq[sp.etype];
  return freq;
}

// JSON-lines serialization of sentences (tokens + BIO labels).
inline std::string corpus_to_jsonl(const Corpus& corpus) {
  std::string out;
  for (const auto& s : corpus.sentences) {
    nlohmann::json obj;
    obj["tokens"] = s.tokens;
    obj["labels"] = spans_to_tags(s.spans, static_cast<int>(s.tokens.size()), TagScheme::BIO);
    out += obj.dump();
    out += '\n';
  }
  return out;
}

}  // namespace fsponer
