#pragma once

// Live backends over HTTP through cpp-httplib. https endpoints need
// CPPHTTPLIB_OPENSSL_SUPPORT defined and OpenSSL linked.

#include <cstdlib>
#include <memory>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "deepgreen/error.hpp"
#include "deepgreen/llm/backend.hpp"
#include "deepgreen/llm/batch.hpp"
#include "deepgreen/llm/retrieval.hpp"

namespace deepgreen::llm {

namespace detail {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

inline SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorCode::InvalidConfig, "endpoint must be an absolute URL: " + url);
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (url.compare(0, scheme_end, "https") == 0)
    throw Error(ErrorCode::InvalidConfig, "https endpoint needs a build with OpenSSL: " + url);
#endif
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace detail

/// OpenAI-compatible chat-completions client. The endpoint is the full URL
/// of the completions route; the bearer token comes from the environment
/// variable named in the config.
class HttpBackend : public Backend {
 public:
  explicit HttpBackend(BackendConfig config) : config_(std::move(config)) {
    const auto url = detail::split_url(config_.endpoint);
    origin_ = url.origin;
    path_ = url.path;
    if (const char* key = std::getenv(config_.api_key_env.c_str())) api_key_ = key;
  }

  std::string id() const override { return config_.backend_id; }

  std::string complete(const Request& request) override {
    httplib::Client client(origin_);
    const auto secs = config_.timeout_ms / 1000;
    const auto usecs = (config_.timeout_ms % 1000) * 1000;
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
    const nlohmann::json body{{"model", config_.model_name},
                              {"temperature", config_.temperature},
                              {"top_p", config_.top_p},
                              {"messages", nlohmann::json::array({{{"role", "user"}, {"content", request.prompt}}})}};
    auto res = client.Post(path_, headers, body.dump(), "application/json");
    if (!res) throw Error(ErrorCode::TransportError, "request failed: " + httplib::to_string(res.error()));
    if (res->status != 200)
      throw Error(ErrorCode::TransportError, "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
    try {
      const auto j = nlohmann::json::parse(res->body);
      return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::TransportError, std::string("unexpected response body: ") + e.what());
    }
  }

 private:
  BackendConfig config_;
  std::string origin_;
  std::string path_;
  std::string api_key_;
};

/// POSTs {"query", "max_passages"} and expects {"passages": [...]}.
class HttpRetriever : public Retriever {
 public:
  HttpRetriever(std::string endpoint, std::string api_key_env) {
    const auto url = detail::split_url(endpoint);
    origin_ = url.origin;
    path_ = url.path;
    if (const char* key = std::getenv(api_key_env.c_str())) api_key_ = key;
  }

  std::vector<std::string> retrieve(const std::string& query, std::size_t max_passages) override {
    httplib::Client client(origin_);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
    const nlohmann::json body{{"query", query}, {"max_passages", max_passages}};
    auto res = client.Post(path_, headers, body.dump(), "application/json");
    if (!res || res->status != 200) throw Error(ErrorCode::TransportError, "retrieval request failed for query: " + query);
    auto passages = nlohmann::json::parse(res->body).at("passages").get<std::vector<std::string>>();
    if (passages.size() > max_passages) passages.resize(max_passages);
    return passages;
  }

 private:
  std::string origin_;
  std::string path_;
  std::string api_key_;
};

}  // namespace deepgreen::llm
