#pragma once

// Completion normalization: turn variably-formatted LLM output back into
// typed entities and align them to token spans of the input sentence.
// Parsing is total; every pathology becomes a counter, never an error.

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fsponer/corpus.hpp"

namespace fsponer {

struct ParsedEntity {
  std::string surface;
  EntityType etype;
  std::optional<EntitySpan> aligned;  // absent = hallucinated
};

struct ParseReport {
  std::vector<ParsedEntity> entities;
  int hallucinated_count = 0;
  int unknown_type_count = 0;
  int malformed_line_count = 0;
};

namespace detail {

inline std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::string lower(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

// Strip list markers ("1.", "1)", "-", "*") and markdown emphasis. Markers
// can stack ("1. - **..."), so peel until the line stabilizes.
inline std::string strip_decoration(std::string line) {
  line = trim(line);
  for (;;) {
    std::string before = line;
    size_t i = 0;
    while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
    if (i > 0 && i < line.size() && (line[i] == '.' || line[i] == ')')) {
      line = trim(line.substr(i + 1));
    } else if (!line.empty() && (line[0] == '-' || line[0] == '*')) {
      auto rest = line.find_first_not_of("-* ");
      line = rest == std::string::npos ? "" : trim(line.substr(rest));
    }
    if (line == before) break;
  }
  // Markdown emphasis and backticks anywhere in the line.
  std::string out;
  for (char c : line)
    if (c != '*' && c != '_' && c != '`') out += c;
  return trim(out);
}

inline std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string cur;
  for (char c : text) {
    if (c == '\n') {
      lines.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  lines.push_back(cur);
  return lines;
}

}  // namespace detail

// Locate each surface as a token subsequence (case-insensitive, leftmost
// unclaimed occurrence); claimed positions are excluded from later matches.
inline void align(std::vector<ParsedEntity>& entities,
                  const std::vector<std::string>& input_tokens) {
  std::vector<bool> claimed(input_tokens.size(), false);
  std::vector<std::string> lowered;
  lowered.reserve(input_tokens.size());
  for (const auto& t : input_tokens) lowered.push_back(detail::lower(t));

  for (auto& e : entities) {
    std::vector<std::string> want;
    std::string cur;
    for (char c : detail::lower(e.surface)) {
      if (std::isspace(static_cast<unsigned char>(c))) {
        if (!cur.empty()) want.push_back(std::move(cur)), cur.clear();
      } else {
        cur += c;
      }
    }
    if (!cur.empty()) want.push_back(std::move(cur));
    if (want.empty() || want.size() > input_tokens.size()) continue;

    for (size_t start = 0; start + want.size() <= input_tokens.size(); ++start) {
      bool ok = true;
      for (size_t j = 0; j < want.size(); ++j) {
        if (claimed[start + j] || lowered[start + j] != want[j]) {
          ok = false;
          break;
        }
      }
      if (ok) {
        for (size_t j = 0; j < want.size(); ++j) claimed[start + j] = true;
        e.aligned = EntitySpan{static_cast<int>(start),
                               static_cast<int>(start + want.size()), e.etype};
        break;
      }
    }
  }
}

inline ParseReport parse_completion(const std::string& text,
                                    const std::set<EntityType>& label_set,
                                    const std::vector<std::string>& input_tokens) {
  ParseReport report;
  std::map<std::string, EntityType> labels_ci;
  for (const auto& l : label_set) labels_ci[detail::lower(l)] = l;

  std::set<std::pair<std::string, EntityType>> seen;
  for (const auto& raw : detail::split_lines(text)) {
    std::string line = detail::strip_decoration(raw);
    if (line.empty()) continue;
    if (detail::lower(line) == "none") continue;

    // Split on the first "::"; fall back to the last single ":".
    std::string left, right;
    auto sep = line.find("::");
    if (sep != std::string::npos) {
      left = detail::trim(line.substr(0, sep));
      right = detail::trim(line.substr(sep + 2));
    } else {
      auto colon = line.rfind(':');
      if (colon == std::string::npos) {
        ++report.malformed_line_count;
        continue;
      }
      left = detail::trim(line.substr(0, colon));
      right = detail::trim(line.substr(colon + 1));
    }
    if (left.empty() || right.empty()) {
      ++report.malformed_line_count;
      continue;
    }

    // "TYPE :: entity" inversion: swap when only the left side is a label.
    bool left_is_label = labels_ci.count(detail::lower(left)) > 0;
    bool right_is_label = labels_ci.count(detail::lower(right)) > 0;
    if (left_is_label && !right_is_label) std::swap(left, right);

    auto it = labels_ci.find(detail::lower(right));
    if (it == labels_ci.end()) {
      ++report.unknown_type_count;
      continue;
    }
    if (!seen.insert({left, it->second}).second) continue;  // dedupe, keep first
    report.entities.push_back({left, it->second, std::nullopt});
  }

  align(report.entities, input_tokens);
  for (const auto& e : report.entities)
    if (!e.aligned) ++report.hallucinated_count;
  return report;
}

}  // namespace fsponer
