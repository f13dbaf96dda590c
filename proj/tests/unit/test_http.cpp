#include <gtest/gtest.h>

#include <cstdlib>
#include <mutex>
#include <thread>

#include "dlm/http_backend.hpp"

namespace {

/// Local chat-completions stand-in; `handler` decides each reply.
class FakeServer {
 public:
  explicit FakeServer(std::function<void(const httplib::Request&, httplib::Response&)> handler) {
    server_.Post("/v1/chat/completions", [this, handler](const httplib::Request& req, httplib::Response& res) {
      {
        std::lock_guard lock(mutex_);
        requests_.push_back(req);
      }
      handler(req, res);
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeServer() {
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  std::vector<httplib::Request> requests() {
    std::lock_guard lock(mutex_);
    return requests_;
  }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::mutex mutex_;
  std::vector<httplib::Request> requests_;
};

std::string reply(const std::string& content) {
  return nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}}.dump();
}

dlm::HttpConfig config_for(const std::string& url, std::string key_env = "") {
  dlm::HttpConfig c;
  c.base_url = url;
  c.api_key_env = std::move(key_env);
  c.timeout_seconds = 2;
  c.retry.max_retries = 2;
  return c;
}

std::vector<long long> delays;
void record_sleep(std::chrono::milliseconds d) { delays.push_back(d.count()); }

TEST(Http, SendsChatRequestWithCredentialFromEnvironment) {
  FakeServer server([](const httplib::Request&, httplib::Response& res) {
    res.set_content(reply("$$$ state $$$"), "application/json");
  });
  ::setenv("DLM_TEST_KEY", "sk-test-123", 1);
  dlm::HttpBackend backend(config_for(server.url(), "DLM_TEST_KEY"), record_sleep);
  EXPECT_EQ(backend.complete("hello", 0.7), "$$$ state $$$");
  const auto reqs = server.requests();
  ASSERT_EQ(reqs.size(), 1u);
  EXPECT_EQ(reqs[0].get_header_value("Authorization"), "Bearer sk-test-123");
  const auto body = nlohmann::json::parse(reqs[0].body);
  EXPECT_EQ(body.at("model"), "gpt-4o-mini");
  EXPECT_EQ(body.at("messages").at(0).at("role"), "user");
  EXPECT_EQ(body.at("messages").at(0).at("content"), "hello");
  EXPECT_DOUBLE_EQ(body.at("temperature").get<double>(), 0.7);
  EXPECT_EQ(backend.describe().dump().find("sk-test-123"), std::string::npos);
  ::unsetenv("DLM_TEST_KEY");
}

TEST(Http, NoCredentialWhenKeyEnvIsEmpty) {
  FakeServer server([](const httplib::Request&, httplib::Response& res) {
    res.set_content(reply("ok"), "application/json");
  });
  dlm::HttpBackend backend(config_for(server.url()), record_sleep);
  EXPECT_EQ(backend.complete("x", 0.0), "ok");
  EXPECT_FALSE(server.requests()[0].has_header("Authorization"));
}

TEST(Http, MissingCredentialVariableFailsBeforeSending) {
  ::unsetenv("DLM_TEST_ABSENT_KEY");
  dlm::HttpBackend backend(config_for("http://127.0.0.1:9", "DLM_TEST_ABSENT_KEY"), record_sleep);
  EXPECT_THROW(backend.complete("x", 0.0), dlm::LlmError);
  EXPECT_EQ(backend.attempts(), 0);
}

TEST(Http, UnreachableEndpointHonorsRetryCount) {
  int port = 0;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }  // closed again, so connections are refused
  delays.clear();
  auto cfg = config_for("http://127.0.0.1:" + std::to_string(port));
  cfg.timeout_seconds = 1;
  dlm::HttpBackend backend(cfg, record_sleep);
  EXPECT_THROW(backend.complete("x", 0.0), dlm::LlmError);
  EXPECT_EQ(backend.attempts(), 3);
  EXPECT_EQ(delays, (std::vector<long long>{500, 1000}));
}

TEST(Http, RetriesRateLimitsThenSucceeds) {
  int calls = 0;
  FakeServer server([&calls](const httplib::Request&, httplib::Response& res) {
    if (++calls < 3) {
      res.status = calls == 1 ? 429 : 503;
      return;
    }
    res.set_content(reply("third time"), "application/json");
  });
  delays.clear();
  dlm::HttpBackend backend(config_for(server.url()), record_sleep);
  EXPECT_EQ(backend.complete("x", 0.0), "third time");
  EXPECT_EQ(backend.attempts(), 3);
  EXPECT_EQ(delays.size(), 2u);
}

TEST(Http, ClientErrorsAreNotRetried) {
  FakeServer server([](const httplib::Request&, httplib::Response& res) {
    res.status = 400;
    res.set_content("bad model", "text/plain");
  });
  dlm::HttpBackend backend(config_for(server.url()), record_sleep);
  try {
    backend.complete("x", 0.0);
    FAIL();
  } catch (const dlm::LlmError& e) {
    EXPECT_NE(std::string(e.what()).find("bad model"), std::string::npos);
  }
  EXPECT_EQ(backend.attempts(), 1);
}

TEST(Http, UnexpectedShapeCarriesRawBody) {
  FakeServer server([](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"error": "quota"})", "application/json");
  });
  dlm::HttpBackend backend(config_for(server.url()), record_sleep);
  try {
    backend.complete("x", 0.0);
    FAIL();
  } catch (const dlm::LlmError& e) {
    EXPECT_NE(std::string(e.what()).find(R"({"error": "quota"})"), std::string::npos);
  }
  EXPECT_THROW(dlm::HttpBackend::decode("not json"), dlm::LlmError);
}

TEST(Http, ConcurrentRequests) {
  FakeServer server([](const httplib::Request& req, httplib::Response& res) {
    res.set_content(reply(nlohmann::json::parse(req.body).at("messages").at(0).at("content")), "application/json");
  });
  auto cfg = config_for(server.url());
  cfg.max_concurrent = 2;
  dlm::HttpBackend backend(cfg, record_sleep);
  std::vector<std::string> out(6);
  std::vector<std::thread> pool;
  for (int i = 0; i < 6; ++i)
    pool.emplace_back([&, i] { out[static_cast<std::size_t>(i)] = backend.complete("p" + std::to_string(i), 0.0); });
  for (auto& t : pool) t.join();
  for (int i = 0; i < 6; ++i) EXPECT_EQ(out[static_cast<std::size_t>(i)], "p" + std::to_string(i));
}

TEST(Http, RetryPolicyBackoff) {
  dlm::RetryPolicy p;
  EXPECT_EQ(p.delay(0).count(), 500);
  EXPECT_EQ(p.delay(3).count(), 4000);
  EXPECT_EQ(p.delay(10).count(), 8000);
}

TEST(Http, ValidatesConfig) {
  auto c = config_for("http://x");
  c.max_concurrent = 0;
  EXPECT_THROW(dlm::HttpBackend{c}, dlm::ConfigError);
  c = config_for("");
  EXPECT_THROW(dlm::HttpBackend{c}, dlm::ConfigError);
}

}  // namespace
