#pragma once

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "deepgreen/error.hpp"
#include "deepgreen/sequences.hpp"
#include "deepgreen/util/hash.hpp"
#include "deepgreen/util/io.hpp"

namespace deepgreen::llm {

enum class Layer { A, B };

inline Layer parse_layer(const std::string& s) {
  if (s == "A" || s == "a") return Layer::A;
  if (s == "B" || s == "b") return Layer::B;
  throw Error(ErrorCode::InvalidConfig, "template layer must be A or B, got '" + s + "'");
}

/// Four-part judgment prompt. The answer template must ask for exactly
/// {"judgment": int, "confidence": float}.
struct PromptTemplate {
  std::string role_anchoring;
  std::string persona_setting;
  std::string task_description;
  std::string answer_template;
  std::string template_id;
  Layer layer = Layer::A;

  void validate() const {
    if (role_anchoring.empty() || persona_setting.empty() || task_description.empty() || answer_template.empty())
      throw Error(ErrorCode::InvalidConfig, "template '" + template_id + "' has an empty part");
    if (answer_template.find("judgment") == std::string::npos || answer_template.find("confidence") == std::string::npos)
      throw Error(ErrorCode::InvalidConfig,
                  "template '" + template_id + "' answer template must request the judgment/confidence JSON schema");
  }

  static PromptTemplate from_json(const nlohmann::json& j) {
    PromptTemplate t;
    j.at("role_anchoring").get_to(t.role_anchoring);
    j.at("persona_setting").get_to(t.persona_setting);
    j.at("task_description").get_to(t.task_description);
    j.at("answer_template").get_to(t.answer_template);
    j.at("template_id").get_to(t.template_id);
    t.layer = parse_layer(j.at("layer").get<std::string>());
    t.validate();
    return t;
  }

  static PromptTemplate load(const std::filesystem::path& path) { return from_json(io::read_json(path)); }

  /// Content hash, recorded in manifests so a template edit invalidates
  /// journals and fixtures keyed by prompt hash.
  std::string digest() const {
    return hash_hex(role_anchoring + '\x1e' + persona_setting + '\x1e' + task_description + '\x1e' + answer_template);
  }
};

struct WordPayload {
  std::string word;
};

struct PairPayload {
  segment::KeywordContextPair pair;
  std::vector<std::string> context_before;
  std::vector<std::string> context_after;
};

using Payload = std::variant<WordPayload, PairPayload>;

inline std::string render_prompt(const PromptTemplate& tpl, const Payload& payload,
                                 const std::vector<std::string>& retrieved = {}) {
  const bool is_word = std::holds_alternative<WordPayload>(payload);
  if (is_word != (tpl.layer == Layer::A))
    throw Error(ErrorCode::PayloadMismatch, std::string("template '") + tpl.template_id + "' is Layer " +
                                                (tpl.layer == Layer::A ? "A" : "B") + " but payload is a " +
                                                (is_word ? "word" : "keyword-context pair"));
  std::string out;
  out += "<Role Anchoring>: " + tpl.role_anchoring + "\n";
  out += "<Persona Setting>: " + tpl.persona_setting + "\n";
  out += "<Task Description>: " + tpl.task_description + "\n";
  out += "<Answer Template>: " + tpl.answer_template + "\n";
  out += "<Input>\n";
  if (is_word) {
    out += "(1) " + std::get<WordPayload>(payload).word + "\n";
  } else {
    const auto& p = std::get<PairPayload>(payload);
    out += "(1) " + p.pair.keyword + "\n";
    std::string context;
    for (const auto& s : p.context_before) context += s;
    context += p.pair.sentence;
    for (const auto& s : p.context_after) context += s;
    out += "(2) " + context + "\n";
  }
  out += "</Input>\n";
  if (!retrieved.empty()) {
    out += "<Evidence>\n";
    for (std::size_t i = 0; i < retrieved.size(); ++i) out += "[" + std::to_string(i + 1) + "] " + retrieved[i] + "\n";
    out += "</Evidence>\n";
  }
  return out;
}

}  // namespace deepgreen::llm
