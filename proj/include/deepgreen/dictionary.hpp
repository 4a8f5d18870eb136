#pragma once

#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "deepgreen/error.hpp"
#include "deepgreen/util/io.hpp"

namespace deepgreen {

struct GreenEntry {
  std::string word;
  double confidence = 0.0;
  std::string model_id;
};

/// Words the Layer-A judge accepted as green-disclosure keywords. The file
/// form is a JSON array of {word, confidence, model_id}.
class GreenDictionary {
 public:
  GreenDictionary() = default;

  void add(GreenEntry entry) {
    if (index_.contains(entry.word)) return;
    index_[entry.word] = entries_.size();
    entries_.push_back(std::move(entry));
  }

  bool contains(const std::string& word) const { return index_.contains(word); }
  const std::vector<GreenEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  std::string built_from;
  std::string template_id;

  nlohmann::json to_json() const {
    auto arr = nlohmann::json::array();
    for (const auto& e : entries_)
      arr.push_back({{"word", e.word}, {"confidence", e.confidence}, {"model_id", e.model_id}});
    return arr;
  }

  static GreenDictionary from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw Error(ErrorCode::IoError, "green dictionary must be a JSON array");
    GreenDictionary d;
    for (const auto& e : j)
      d.add(GreenEntry{e.at("word").get<std::string>(), e.value("confidence", 1.0), e.value("model_id", std::string{})});
    return d;
  }

  static GreenDictionary load(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw Error(ErrorCode::MissingArtifact, "green dictionary (" + path.string() + ")");
    return from_json(io::read_json(path));
  }

 private:
  std::vector<GreenEntry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace deepgreen
