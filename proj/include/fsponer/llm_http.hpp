#pragma once

// OpenAI-compatible chat-completions client. POST <endpoint>/chat/completions
// with a single user message; exponential backoff on 429/5xx; bearer token
// read from the FSPONER_API_KEY environment variable only.

#include <cstdlib>
#include <memory>
#include <stdexcept>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "fsponer/llm.hpp"

namespace fsponer {

class HttpBackend : public CompletionBackend {
 public:
  explicit HttpBackend(LlmConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.endpoint.empty() || cfg_.model.empty())
      throw std::runtime_error("http backend requires endpoint and model");
    split_endpoint(cfg_.endpoint, base_, path_prefix_);
  }

  std::string complete(const std::string& prompt_text) override {
    nlohmann::json body = {
        {"model", cfg_.model},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt_text}}})},
        {"temperature", cfg_.temperature},
        {"max_tokens", cfg_.max_output_tokens}};

    httplib::Client client(base_);
    client.set_connection_timeout(cfg_.timeout_seconds);
    client.set_read_timeout(cfg_.timeout_seconds);
    httplib::Headers headers;
    if (const char* key = std::getenv("FSPONER_API_KEY"))
      headers.emplace("Authorization", std::string("Bearer ") + key);

    std::string last_error;
    int backoff_ms = 500;
    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
        backoff_ms *= 2;
      }
      auto res = client.Post(path_prefix_ + "/chat/completions", headers, body.dump(),
                             "application/json");
      if (!res) {
        last_error = "transport error: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status == 429 || res->status >= 500) {
        last_error = "HTTP " + std::to_string(res->status) + ": " + excerpt(res->body);
        continue;
      }
      if (res->status < 200 || res->status >= 300)
        throw std::runtime_error("HTTP " + std::to_string(res->status) + ": " +
                                 excerpt(res->body));
      auto j = nlohmann::json::parse(res->body);
      return j.at("choices").at(0).at("message").at("content").get<std::string>();
    }
    throw std::runtime_error("request failed after " + std::to_string(cfg_.max_retries + 1) +
                             " attempts; last error: " + last_error);
  }

  std::string id() const override { return "http:" + cfg_.model; }

 private:
  static void split_endpoint(const std::string& url, std::string& base, std::string& path) {
    auto scheme_end = url.find("://");
    auto host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    auto path_start = url.find('/', host_start);
    if (path_start == std::string::npos) {
      base = url;
      path.clear();
    } else {
      base = url.substr(0, path_start);
      path = url.substr(path_start);
      while (!path.empty() && path.back() == '/') path.pop_back();
    }
  }

  static std::string excerpt(const std::string& body) {
    return body.size() <= 200 ? body : body.substr(0, 200) + "...";
  }

  LlmConfig cfg_;
  std::string base_;
  std::string path_prefix_;
};

inline std::unique_ptr<CompletionBackend> make_http_backend(const LlmConfig& cfg) {
  return std::make_unique<HttpBackend>(cfg);
}

}  // namespace fsponer
