#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <ctime>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "deepgreen/error.hpp"
#include "deepgreen/llm/backend.hpp"
#include "deepgreen/llm/response.hpp"
#include "deepgreen/util/hash.hpp"

namespace deepgreen::llm {

enum class BackendKind { http_api, local, mock };

struct BackendConfig {
  std::string backend_id;
  BackendKind kind = BackendKind::mock;
  std::string endpoint;
  std::string model_name;
  std::string api_key_env = "DEEPGREEN_API_KEY";
  std::string fixture_path;
  int max_inflight = 100;
  int max_retries = 3;
  int timeout_ms = 60000;
  double temperature = 0.0;
  double top_p = 1.0;

  void validate() const {
    if (backend_id.empty()) throw Error(ErrorCode::BatchAborted, "backend without id");
    if (max_inflight < 1) throw Error(ErrorCode::BatchAborted, "max_inflight must be >= 1");
    if (max_retries < 0) throw Error(ErrorCode::BatchAborted, "max_retries must be >= 0");
    if (kind == BackendKind::mock && fixture_path.empty())
      throw Error(ErrorCode::BatchAborted, "mock backend '" + backend_id + "' needs a fixture path");
  }
};

struct BatchItem {
  std::string item_key;
  std::string match_text;
  std::string prompt;
};

/// Per-item outcome. `response` is empty when every attempt failed; such
/// items are kept out of any downstream counting.
struct ItemResult {
  std::string item_key;
  std::string prompt_hash;
  std::optional<JudgmentResponse> response;
  int attempts = 0;
  std::string failure;

  bool ok() const { return response.has_value(); }
};

struct BatchOutput {
  std::vector<ItemResult> results;
  std::vector<JournalEntry> journal;  // input order, then attempt order
  std::size_t failed = 0;
};

namespace detail {

inline std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline void run_item(const BatchItem& item, Backend& backend, int max_retries, ItemResult& result,
                     std::vector<JournalEntry>& journal) {
  const bool deterministic = backend.deterministic();
  result.item_key = item.item_key;
  result.prompt_hash = hash_hex(item.prompt);
  const int max_attempts = 1 + max_retries;
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    Request req{item.item_key, item.match_text, item.prompt, result.prompt_hash, attempt};
    JournalEntry entry;
    entry.item = item.item_key;
    entry.prompt_hash = result.prompt_hash;
    entry.attempt = attempt;
    entry.backend_id = backend.id();
    if (!deterministic) entry.timestamp = utc_now();
    result.attempts = attempt;
    const auto t0 = std::chrono::steady_clock::now();
    bool retryable = true;
    try {
      entry.raw_text = backend.complete(req);
      const long latency = deterministic ? 0
                                         : static_cast<long>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                                                 std::chrono::steady_clock::now() - t0)
                                                                 .count());
      entry.latency_ms = latency;
      auto parsed = parse_response(entry.raw_text);
      parsed.backend_id = backend.id();
      parsed.latency_ms = latency;
      parsed.attempt = attempt;
      entry.parsed = std::make_pair(parsed.judgment, parsed.confidence);
      journal.push_back(std::move(entry));
      result.response = std::move(parsed);
      result.failure.clear();
      return;
    } catch (const Error& e) {
      entry.error = e.what();
      retryable = e.code() != ErrorCode::FixtureMissing;
    } catch (const std::exception& e) {
      entry.error = std::string("TransportError: ") + e.what();
    }
    result.failure = entry.error;
    journal.push_back(std::move(entry));
    if (!retryable) return;
  }
}

}  // namespace detail

/// Runs every item against the backend with at most `max_inflight` calls
/// outstanding. Each item is retried up to `max_retries` times after the
/// first attempt on malformed or out-of-range answers and transport errors.
/// Results come back in input order whatever the completion order.
inline BatchOutput batch_submit(const std::vector<BatchItem>& items, Backend& backend, int max_inflight, int max_retries) {
  if (max_inflight < 1) throw Error(ErrorCode::BatchAborted, "max_inflight must be >= 1");
  if (max_retries < 0) throw Error(ErrorCode::BatchAborted, "max_retries must be >= 0");
  BatchOutput out;
  const std::size_t n = items.size();
  out.results.resize(n);
  std::vector<std::vector<JournalEntry>> journals(n);

  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(max_inflight), n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1))
      detail::run_item(items[i], backend, max_retries, out.results[i], journals[i]);
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (!out.results[i].ok()) ++out.failed;
    for (auto& e : journals[i]) out.journal.push_back(std::move(e));
  }
  return out;
}

inline BatchOutput batch_submit(const std::vector<BatchItem>& items, Backend& backend, const BackendConfig& config) {
  config.validate();
  return batch_submit(items, backend, config.max_inflight, config.max_retries);
}

}  // namespace deepgreen::llm
