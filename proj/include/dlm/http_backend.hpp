#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <functional>
#include <semaphore>
#include <string>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "dlm/error.hpp"
#include "dlm/llm.hpp"

namespace dlm {

struct RetryPolicy {
  int max_retries = 3;  // attempts = max_retries + 1
  std::chrono::milliseconds base_delay{500};
  double multiplier = 2.0;
  std::chrono::milliseconds max_delay{8000};

  std::chrono::milliseconds delay(int retry) const {
    double d = static_cast<double>(base_delay.count());
    for (int i = 0; i < retry; ++i) d *= multiplier;
    return std::chrono::milliseconds(static_cast<long long>(std::min(d, static_cast<double>(max_delay.count()))));
  }
};

struct HttpConfig {
  std::string base_url = "https://api.openai.com";
  std::string path = "/v1/chat/completions";
  std::string model = "gpt-4o-mini";
  std::string api_key_env = "OPENAI_API_KEY";  // empty: send no credential
  int timeout_seconds = 60;
  int max_concurrent = 4;
  RetryPolicy retry;
};

inline void validate(const HttpConfig& c) {
  if (c.base_url.empty()) throw ConfigError("http base_url is empty");
  if (c.model.empty()) throw ConfigError("http model is empty");
  if (c.timeout_seconds < 1) throw ConfigError("http timeout must be >= 1 second");
  if (c.max_concurrent < 1 || c.max_concurrent > 64) throw ConfigError("max_concurrent must lie in [1, 64]");
  if (c.retry.max_retries < 0) throw ConfigError("max_retries must be >= 0");
}

/// Chat-completions client. Connection failures, 429 and 5xx are retried
/// with exponential backoff; other statuses fail immediately.
class HttpBackend final : public LlmBackend {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  explicit HttpBackend(HttpConfig config, Sleeper sleeper = [](std::chrono::milliseconds d) {
    std::this_thread::sleep_for(d);
  })
      : config_(std::move(config)), sleeper_(std::move(sleeper)), slots_(config_.max_concurrent) {
    validate(config_);
  }

  std::string complete(const std::string& prompt, double temperature) override {
    const nlohmann::json request = {{"model", config_.model},
                                    {"messages", {{{"role", "user"}, {"content", prompt}}}},
                                    {"temperature", temperature}};
    httplib::Headers headers;
    if (!config_.api_key_env.empty()) {
      const char* key = std::getenv(config_.api_key_env.c_str());
      if (!key || !*key) throw LlmError("credential variable " + config_.api_key_env + " is not set");
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    slots_.acquire();
    struct Release {
      std::counting_semaphore<64>& s;
      ~Release() { s.release(); }
    } release{slots_};

    std::string last_error;
    for (int attempt = 0; attempt <= config_.retry.max_retries; ++attempt) {
      if (attempt > 0) sleeper_(config_.retry.delay(attempt - 1));
      ++attempts_;
      httplib::Client client(config_.base_url);
      client.set_connection_timeout(config_.timeout_seconds, 0);
      client.set_read_timeout(config_.timeout_seconds, 0);
      client.set_write_timeout(config_.timeout_seconds, 0);
      auto res = client.Post(config_.path, headers, request.dump(), "application/json");
      if (!res) {
        last_error = "connection failed: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status == 429 || res->status >= 500) {
        last_error = "HTTP " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200) throw LlmError("HTTP " + std::to_string(res->status) + ": " + res->body);
      return decode(res->body);
    }
    throw LlmError("request failed after " + std::to_string(config_.retry.max_retries + 1) +
                   " attempts: " + last_error);
  }

  /// First choice's message content of a chat-completions response.
  static std::string decode(const std::string& body) {
    try {
      const auto j = nlohmann::json::parse(body);
      return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw LlmError(std::string("unexpected response shape (") + e.what() + "): " + body);
    }
  }

  nlohmann::json describe() const override {
    return {{"kind", "http"},
            {"base_url", config_.base_url},
            {"path", config_.path},
            {"model", config_.model},
            {"api_key_env", config_.api_key_env},
            {"timeout_seconds", config_.timeout_seconds},
            {"max_retries", config_.retry.max_retries},
            {"max_concurrent", config_.max_concurrent}};
  }

  int attempts() const { return attempts_; }

 private:
  HttpConfig config_;
  Sleeper sleeper_;
  std::counting_semaphore<64> slots_;
  std::atomic<int> attempts_{0};
};

}  // namespace dlm
