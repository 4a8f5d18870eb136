#pragma once

#include <cctype>
#include <cmath>
#include <string>
#include <string_view>

#include <json.hpp>

#include "deepgreen/error.hpp"

namespace deepgreen::llm {

struct JudgmentResponse {
  int judgment = 0;
  double confidence = 0.0;
  std::string raw_text;
  std::string backend_id;
  long latency_ms = 0;
  int attempt = 1;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

/// Unwraps one ```...``` block (optionally tagged, e.g. ```json). Returns
/// the input unchanged when it is not fenced; throws when the fence is
/// malformed or text surrounds it.
inline std::string_view unfence(std::string_view s) {
  if (s.substr(0, 3) != "```") return s;
  const auto nl = s.find('\n');
  if (nl == std::string_view::npos) throw Error(ErrorCode::MalformedAnswer, "unterminated code fence");
  const auto tag = trim(s.substr(3, nl - 3));
  for (char c : tag)
    if (!std::isalnum(static_cast<unsigned char>(c))) throw Error(ErrorCode::MalformedAnswer, "bad code fence tag");
  const auto body = s.substr(nl + 1);
  const auto close = body.rfind("```");
  if (close == std::string_view::npos || !trim(body.substr(close + 3)).empty())
    throw Error(ErrorCode::MalformedAnswer, "code fence not closed at end of answer");
  const auto inner = body.substr(0, close);
  if (inner.find("```") != std::string_view::npos) throw Error(ErrorCode::MalformedAnswer, "more than one code fence");
  return trim(inner);
}

}  // namespace detail

/// Strict parse of {"judgment": <int>, "confidence": <float>}. Surrounding
/// whitespace and a single fenced code block are tolerated; any other text,
/// extra keys, or wrong types are MalformedAnswer. Values outside
/// judgment ∈ {0,1}, confidence ∈ [0,1] are OutOfRange.
inline JudgmentResponse parse_response(std::string_view raw) {
  const auto body = detail::unfence(detail::trim(raw));
  if (body.empty()) throw Error(ErrorCode::MalformedAnswer, "empty answer");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::MalformedAnswer, "answer is not a pure JSON object: " + std::string(raw.substr(0, 120)));
  }
  if (!j.is_object() || j.size() != 2 || !j.contains("judgment") || !j.contains("confidence"))
    throw Error(ErrorCode::MalformedAnswer, "answer must have exactly the keys judgment and confidence");
  const auto& jd = j["judgment"];
  const auto& cf = j["confidence"];
  if (!jd.is_number_integer()) throw Error(ErrorCode::MalformedAnswer, "judgment must be an integer");
  if (!cf.is_number()) throw Error(ErrorCode::MalformedAnswer, "confidence must be a number");

  JudgmentResponse r;
  const auto judgment = jd.get<long long>();
  r.confidence = cf.get<double>();
  if (judgment != 0 && judgment != 1)
    throw Error(ErrorCode::OutOfRange, "judgment " + std::to_string(judgment) + " not in {0,1}");
  if (!(r.confidence >= 0.0 && r.confidence <= 1.0))
    throw Error(ErrorCode::OutOfRange, "confidence " + std::to_string(r.confidence) + " not in [0,1]");
  r.judgment = static_cast<int>(judgment);
  r.raw_text = std::string(raw);
  return r;
}

}  // namespace deepgreen::llm
