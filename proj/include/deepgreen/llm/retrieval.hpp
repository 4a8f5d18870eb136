#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "deepgreen/error.hpp"
#include "deepgreen/util/io.hpp"

namespace deepgreen::llm {

struct RetrievalConfig {
  std::string provider_id;
  std::string snapshot_path;
  std::size_t max_passages = 3;
  std::string endpoint;  // live provider; ignored when replaying a snapshot
};

class Retriever {
 public:
  virtual ~Retriever() = default;
  virtual std::vector<std::string> retrieve(const std::string& query, std::size_t max_passages) = 0;
};

/// Cached passages keyed by query: {"<query>": ["passage", ...]}. Never
/// touches the network; unknown queries retrieve nothing.
class SnapshotRetriever : public Retriever {
 public:
  explicit SnapshotRetriever(std::map<std::string, std::vector<std::string>> snapshot) : snapshot_(std::move(snapshot)) {}

  static SnapshotRetriever load(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw Error(ErrorCode::MissingArtifact, "retrieval snapshot (" + path.string() + ")");
    return SnapshotRetriever(io::read_json(path).get<std::map<std::string, std::vector<std::string>>>());
  }

  std::vector<std::string> retrieve(const std::string& query, std::size_t max_passages) override {
    auto it = snapshot_.find(query);
    if (it == snapshot_.end()) return {};
    std::vector<std::string> out(it->second.begin(),
                                 it->second.begin() + static_cast<std::ptrdiff_t>(std::min(max_passages, it->second.size())));
    return out;
  }

 private:
  std::map<std::string, std::vector<std::string>> snapshot_;
};

/// Wraps a live retriever and records every answer so the run can later be
/// replayed through SnapshotRetriever.
class RecordingRetriever : public Retriever {
 public:
  RecordingRetriever(std::shared_ptr<Retriever> live, std::filesystem::path snapshot_path)
      : live_(std::move(live)), path_(std::move(snapshot_path)) {}

  std::vector<std::string> retrieve(const std::string& query, std::size_t max_passages) override {
    {
      std::lock_guard lock(mutex_);
      if (auto it = recorded_.find(query); it != recorded_.end()) return it->second;
    }
    auto passages = live_->retrieve(query, max_passages);
    std::lock_guard lock(mutex_);
    recorded_[query] = passages;
    return passages;
  }

  void flush() const {
    std::lock_guard lock(mutex_);
    io::write_file(path_, nlohmann::json(recorded_).dump(2) + "\n");
  }

 private:
  std::shared_ptr<Retriever> live_;
  std::filesystem::path path_;
  mutable std::mutex mutex_;
  std::map<std::string, std::vector<std::string>> recorded_;
};

}  // namespace deepgreen::llm
