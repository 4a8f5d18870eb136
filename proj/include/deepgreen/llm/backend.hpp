#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "deepgreen/error.hpp"
#include "deepgreen/util/io.hpp"

namespace deepgreen::llm {

/// One call to a backend. `item_key` is the word (Layer A) or pair id
/// (Layer B); `match_text` is the payload text mock rules look at.
struct Request {
  std::string item_key;
  std::string match_text;
  std::string prompt;
  std::string prompt_hash;
  int attempt = 1;
};

/// Backends must be safe to call from several threads at once. Failures
/// are reported by throwing Error with TransportError (retried) or
/// FixtureMissing (not retried).
class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string id() const = 0;
  virtual std::string complete(const Request& request) = 0;
  /// Deterministic backends get zero latency and no wall-clock timestamps in
  /// journals, so replayed runs are byte-identical.
  virtual bool deterministic() const { return false; }
};

/// Scripted backend. Fixture forms:
///   {"<hash>": ["raw", ...], ...}                      plain map
///   {"responses": {...}, "rules": [...], "default": ...}  extended
/// A key is looked up as the prompt hash first, then as the item key. The
/// k-th attempt gets the k-th scripted entry (the last one repeats). Rules
/// ({"contains": s, "response": raw}) match substrings of the payload text
/// in order. Without a hit the default response is used, or the call fails
/// with FixtureMissing when no default is configured.
class MockBackend : public Backend {
 public:
  struct Rule {
    std::string contains;
    std::string response;
  };

  MockBackend(std::string backend_id, std::unordered_map<std::string, std::vector<std::string>> responses,
              std::vector<Rule> rules = {}, std::optional<std::string> fallback = std::nullopt)
      : id_(std::move(backend_id)), responses_(std::move(responses)), rules_(std::move(rules)), fallback_(std::move(fallback)) {}

  static MockBackend from_json(std::string backend_id, const nlohmann::json& j) {
    std::unordered_map<std::string, std::vector<std::string>> responses;
    std::vector<Rule> rules;
    std::optional<std::string> fallback;
    const bool extended = j.is_object() && j.contains("responses") && j["responses"].is_object();
    const auto& map = extended ? j["responses"] : j;
    if (!map.is_object()) throw Error(ErrorCode::InvalidConfig, "mock fixture must be a JSON object");
    for (auto it = map.begin(); it != map.end(); ++it) {
      if (it.value().is_string()) {
        responses[it.key()] = {it.value().get<std::string>()};
      } else {
        responses[it.key()] = it.value().get<std::vector<std::string>>();
        if (responses[it.key()].empty()) throw Error(ErrorCode::InvalidConfig, "empty script for key " + it.key());
      }
    }
    if (extended) {
      for (const auto& r : j.value("rules", nlohmann::json::array()))
        rules.push_back(Rule{r.at("contains").get<std::string>(), r.at("response").get<std::string>()});
      if (j.contains("default") && !j["default"].is_null()) {
        const auto& d = j["default"];
        fallback = d.is_string() ? d.get<std::string>()
                                 : nlohmann::json{{"judgment", d.at("judgment")}, {"confidence", d.at("confidence")}}.dump();
      }
    }
    return MockBackend(std::move(backend_id), std::move(responses), std::move(rules), std::move(fallback));
  }

  static MockBackend load(std::string backend_id, const std::filesystem::path& fixture) {
    if (!std::filesystem::exists(fixture)) throw Error(ErrorCode::FixtureMissing, "mock fixture not found: " + fixture.string());
    return from_json(std::move(backend_id), io::read_json(fixture));
  }

  /// Fixed answer for unknown inputs, e.g. judgment 0 at confidence 0.5.
  void set_default(int judgment, double confidence) {
    fallback_ = nlohmann::json{{"judgment", judgment}, {"confidence", confidence}}.dump();
  }
  void clear_default() { fallback_.reset(); }

  std::string id() const override { return id_; }
  bool deterministic() const override { return true; }

  std::string complete(const Request& request) override {
    auto pick = [&](const std::vector<std::string>& script) {
      const auto k = static_cast<std::size_t>(std::max(request.attempt, 1) - 1);
      return script[std::min(k, script.size() - 1)];
    };
    if (auto it = responses_.find(request.prompt_hash); it != responses_.end()) return pick(it->second);
    if (auto it = responses_.find(request.item_key); it != responses_.end()) return pick(it->second);
    for (const auto& rule : rules_)
      if (request.match_text.find(rule.contains) != std::string::npos) return rule.response;
    if (fallback_) return *fallback_;
    throw Error(ErrorCode::FixtureMissing, "no scripted response for '" + request.item_key + "'");
  }

 private:
  std::string id_;
  std::unordered_map<std::string, std::vector<std::string>> responses_;
  std::vector<Rule> rules_;
  std::optional<std::string> fallback_;
};

/// Transcript record; one per attempt.
struct JournalEntry {
  std::string item;
  std::string prompt_hash;
  std::string raw_text;
  std::optional<std::pair<int, double>> parsed;
  std::string error;
  int attempt = 1;
  std::string timestamp;
  std::string backend_id;
  long latency_ms = 0;
};

inline nlohmann::json to_json(const JournalEntry& e) {
  nlohmann::json j{{"item", e.item},       {"prompt_hash", e.prompt_hash}, {"raw_text", e.raw_text},
                   {"attempt", e.attempt}, {"backend_id", e.backend_id}};
  j["parsed"] = e.parsed ? nlohmann::json{{"judgment", e.parsed->first}, {"confidence", e.parsed->second}} : nlohmann::json();
  if (!e.error.empty()) j["error"] = e.error;
  j["timestamp"] = e.timestamp.empty() ? nlohmann::json() : nlohmann::json(e.timestamp);
  if (e.latency_ms) j["latency_ms"] = e.latency_ms;
  return j;
}

inline JournalEntry journal_entry_from_json(const nlohmann::json& j) {
  JournalEntry e;
  e.item = j.at("item").get<std::string>();
  e.prompt_hash = j.at("prompt_hash").get<std::string>();
  e.raw_text = j.value("raw_text", std::string{});
  e.attempt = j.value("attempt", 1);
  e.backend_id = j.value("backend_id", std::string{});
  e.error = j.value("error", std::string{});
  if (j.contains("parsed") && j["parsed"].is_object())
    e.parsed = std::make_pair(j["parsed"].at("judgment").get<int>(), j["parsed"].at("confidence").get<double>());
  if (j.contains("timestamp") && j["timestamp"].is_string()) e.timestamp = j["timestamp"].get<std::string>();
  return e;
}

inline std::string journal_jsonl(const std::vector<JournalEntry>& entries) {
  std::string out;
  for (const auto& e : entries) {
    out += to_json(e).dump();
    out.push_back('\n');
  }
  return out;
}

inline std::vector<JournalEntry> load_journal(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::MissingArtifact, "journal (" + path.string() + ")");
  std::vector<JournalEntry> out;
  for (const auto& j : io::read_jsonl(path)) out.push_back(journal_entry_from_json(j));
  return out;
}

/// Offline replay of a transcript: answers (item, prompt hash, attempt)
/// with the recorded raw text; transport failures replay as failures.
class ReplayBackend : public Backend {
 public:
  ReplayBackend(std::string backend_id, const std::vector<JournalEntry>& journal) : id_(std::move(backend_id)) {
    for (const auto& e : journal) entries_[{e.item, e.prompt_hash, e.attempt}] = e;
  }

  std::string id() const override { return id_; }
  bool deterministic() const override { return true; }

  std::string complete(const Request& request) override {
    auto it = entries_.find({request.item_key, request.prompt_hash, request.attempt});
    if (it == entries_.end())
      throw Error(ErrorCode::FixtureMissing, "journal has no attempt " + std::to_string(request.attempt) + " for '" +
                                                 request.item_key + "' with prompt " + request.prompt_hash);
    const auto& e = it->second;
    if (e.raw_text.empty() && !e.error.empty()) throw Error(ErrorCode::TransportError, "replayed: " + e.error);
    return e.raw_text;
  }

 private:
  std::string id_;
  std::map<std::tuple<std::string, std::string, int>, JournalEntry> entries_;
};

}  // namespace deepgreen::llm
