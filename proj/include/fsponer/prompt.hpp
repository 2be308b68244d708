#pragma once

// Four-block prompt assembly: task description, entity-type enumeration,
// few-shot examples, input sentence (left open at "Entities:" for completion).

#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fsponer/corpus.hpp"

namespace fsponer {

struct PromptTemplate {
  std::string task_description;
  std::string domain_name;
  std::vector<std::pair<EntityType, std::string>> entity_types;  // (label, optional gloss)
  std::string example_header = "Here are some examples:";
  std::string input_header = "Extract the entities from the following sentence.";
};

// Default template for a label set; task description pins the output format.
inline PromptTemplate default_template(const std::string& domain,
                                       const std::set<EntityType>& label_set) {
  PromptTemplate t;
  t.domain_name = domain;
  t.task_description =
      "You are an expert annotator for named entity recognition in the " + domain +
      " domain. Identify every entity mention in the given sentence and assign it one of "
      "the predefined entity types. Output one line per entity in the exact format "
      "\"<entity text> :: <TYPE>\", with no numbering and no extra commentary. "
      "If the sentence contains no entities, output the single word NONE.";
  for (const auto& l : label_set) t.entity_types.emplace_back(l, "");
  return t;
}

inline PromptTemplate template_from_json(const nlohmann::json& j) {
  PromptTemplate t;
  t.task_description = j.at("task_description").get<std::string>();
  t.domain_name = j.value("domain_name", "");
  for (const auto& e : j.at("entity_types")) {
    if (e.is_string())
      t.entity_types.emplace_back(e.get<std::string>(), "");
    else
      t.entity_types.emplace_back(e.at("name").get<std::string>(), e.value("gloss", ""));
  }
  if (j.contains("example_header")) t.example_header = j["example_header"].get<std::string>();
  if (j.contains("input_header")) t.input_header = j["input_header"].get<std::string>();
  if (t.entity_types.empty()) throw std::runtime_error("template has no entity types");
  return t;
}

struct RenderedPrompt {
  std::string text;
  std::vector<int> example_ids;  // rendered order
  int token_estimate = 0;        // chars/4 heuristic for context-window fit
};

// Canonical example block: sentence line plus one "<entity text> :: <TYPE>"
// line per span, NONE when the sentence has no entities.
inline std::string render_example(const TaggedSentence& s) {
  std::string out = "Sentence: " + s.text() + "\nEntities:\n";
  if (s.spans.empty()) {
    out += "NONE";
  } else {
    for (size_t i = 0; i < s.spans.size(); ++i) {
      if (i) out += '\n';
      out += s.span_text(s.spans[i]) + " :: " + s.spans[i].etype;
    }
  }
  return out;
}

inline RenderedPrompt build_prompt(const PromptTemplate& tmpl,
                                   const std::vector<TaggedSentence>& examples,
                                   const TaggedSentence& input) {
  if (tmpl.entity_types.empty()) throw std::runtime_error("template has no entity types");
  RenderedPrompt p;

  // Block 1: task description.
  p.text = tmpl.task_description + "\n\n";

  // Block 2: entity-type enumeration with glosses.
  p.text += "The predefined entity types are: ";
  for (size_t i = 0; i < tmpl.entity_types.size(); ++i) {
    if (i) p.text += ", ";
    p.text += tmpl.entity_types[i].first;
    if (!tmpl.entity_types[i].second.empty())
      p.text += " (" + tmpl.entity_types[i].second + ")";
  }
  p.text += ".\n\n";

  // Block 3: few-shot examples (absent in the zero-shot case).
  if (!examples.empty()) {
    p.text += tmpl.example_header + "\n\n";
    for (const auto& ex : examples) {
      p.text += render_example(ex) + "\n\n";
      p.example_ids.push_back(ex.id);
    }
  }

  // Block 4: the input sentence, left open for the completion.
  p.text += tmpl.input_header + "\n";
  p.text += "Sentence: " + input.text() + "\nEntities:";

  p.token_estimate = static_cast<int>(p.text.size() / 4);
  return p;
}

}  // namespace fsponer
