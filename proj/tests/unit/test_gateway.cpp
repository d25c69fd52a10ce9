#include <gtest/gtest.h>
#include <httplib.h>

#include <atomic>
#include <cstdlib>
#include <deque>
#include <thread>

#include "figsynth/errors.hpp"
#include "figsynth/gateway.hpp"

namespace figsynth {
namespace {

using nlohmann::json;

std::string completion(const std::string& text) {
  return json{{"choices", json::array({{{"message", {{"role", "assistant"}, {"content", text}}}}})}}.dump();
}

HttpReply reply(int status, std::string body) {
  HttpReply r;
  r.status = status;
  r.body = std::move(body);
  return r;
}

class ScriptedTransport : public HttpTransport {
 public:
  explicit ScriptedTransport(std::deque<HttpReply> replies) : replies_(std::move(replies)) {}
  HttpReply post(const std::string& url, const HttpHeaders& headers, const std::string& body,
                 int) override {
    ++calls;
    last_url = url;
    last_headers = headers;
    last_body = body;
    HttpReply r = replies_.front();
    if (replies_.size() > 1) replies_.pop_front();
    return r;
  }
  int calls = 0;
  std::string last_url;
  HttpHeaders last_headers;
  std::string last_body;

 private:
  std::deque<HttpReply> replies_;
};

class KeyEnv : public ::testing::Test {
 protected:
  void SetUp() override { ::setenv("FIGSYNTH_TEST_KEY", "sk-test", 1); }
  void TearDown() override { ::unsetenv("FIGSYNTH_TEST_KEY"); }

  GatewayConfig real_cfg(const std::string& url = "http://example.invalid/v1") {
    GatewayConfig cfg;
    cfg.mode = GatewayMode::Real;
    cfg.endpoint_url = url;
    cfg.api_key_env = "FIGSYNTH_TEST_KEY";
    cfg.model = "test-model";
    cfg.max_retries = 3;
    cfg.base_backoff_ms = 10;
    cfg.timeout_ms = 5000;
    return cfg;
  }
};

ChatRequest request(const std::string& user = "hello") {
  ChatRequest r;
  r.system = "You are terse.";
  r.user = user;
  return r;
}

TEST(Mock, IsPureFunctionOfSeedAndRequest) {
  MockBackend a(7), b(7), c(8);
  for (const std::string stage : {"#stage:topic", "#stage:data", "#stage:qa"}) {
    ChatRequest r = request("Give me 20 topics about charts");
    r.system = stage;
    EXPECT_EQ(a.complete(r).text, b.complete(r).text);
    EXPECT_EQ(a.complete(r).text, a.complete(r).text);
  }
  ChatRequest r = request("Give me 20 topics");
  r.system = "#stage:topic";
  EXPECT_NE(a.complete(r).text, c.complete(r).text);
}

TEST(Mock, EmptyUserIsRejected) {
  MockBackend m(1);
  EXPECT_THROW(m.complete(ChatRequest{}), ConfigError);
}

TEST(Prompt, MarkersAreClassified) {
  ChatRequest r = request();
  EXPECT_EQ(classify_prompt(r), StageTag::Data);
  r.system = "intro\n" + stage_marker(StageTag::Qa) + "\n#chart:pie\n";
  EXPECT_EQ(classify_prompt(r), StageTag::Qa);
  EXPECT_EQ(prompt_marker(r, "chart"), "pie");
  EXPECT_EQ(prompt_marker(r, "missing"), "");
}

TEST(Wire, BodyAndReply) {
  ChatRequest r = request("hi");
  r.temperature = 0.25;
  r.max_tokens = 77;
  const json body = json::parse(build_chat_body(r, "m1"));
  EXPECT_EQ(body["model"], "m1");
  ASSERT_EQ(body["messages"].size(), 2u);
  EXPECT_EQ(body["messages"][0]["role"], "system");
  EXPECT_EQ(body["messages"][1]["content"], "hi");
  EXPECT_EQ(body["temperature"], 0.25);
  EXPECT_EQ(body["max_tokens"], 77);
  EXPECT_EQ(parse_chat_reply(completion("ok")), "ok");
  EXPECT_THROW(parse_chat_reply("{\"choices\": []}"), ParseFailure);
  EXPECT_THROW(parse_chat_reply("<html>"), ParseFailure);
}

TEST(Config, ApiKeyFieldIsRejected) {
  EXPECT_THROW(gateway_config_from_json(json{{"api_key", "sk-leak"}}), ConfigError);
  const GatewayConfig cfg = gateway_config_from_json(json{{"mode", "real"}, {"model", "m"}});
  EXPECT_EQ(cfg.mode, GatewayMode::Real);
  EXPECT_EQ(to_json(cfg).count("api_key"), 0u);
}

TEST(Config, MissingKeyFailsFast) {
  ::unsetenv("FIGSYNTH_ABSENT_KEY");
  GatewayConfig cfg;
  cfg.mode = GatewayMode::Real;
  cfg.api_key_env = "FIGSYNTH_ABSENT_KEY";
  EXPECT_THROW(cfg.validate(), MissingApiKey);
  EXPECT_THROW(Gateway{cfg}, MissingApiKey);
  cfg.mode = GatewayMode::Mock;
  EXPECT_NO_THROW(cfg.validate());
}

TEST_F(KeyEnv, RetriesOn429ThenSucceeds) {
  auto t = std::make_shared<ScriptedTransport>(std::deque<HttpReply>{
      reply(429, "slow down"), reply(503, "busy"), reply(200, completion("done"))});
  std::vector<std::chrono::milliseconds> sleeps;
  HttpBackend backend(real_cfg(), t, [&](std::chrono::milliseconds d) { sleeps.push_back(d); });
  const ChatResponse resp = backend.complete(request());
  EXPECT_EQ(resp.text, "done");
  EXPECT_EQ(resp.retries, 2);
  EXPECT_EQ(t->calls, 3);
  ASSERT_EQ(sleeps.size(), 2u);
  EXPECT_EQ(t->last_url, "http://example.invalid/v1/chat/completions");
  bool auth = false;
  for (const auto& [k, v] : t->last_headers) auth |= (k == "Authorization" && v == "Bearer sk-test");
  EXPECT_TRUE(auth);
}

TEST_F(KeyEnv, AuthErrorIsNeverRetried) {
  for (int status : {401, 403}) {
    auto t = std::make_shared<ScriptedTransport>(std::deque<HttpReply>{reply(status, "no"), reply(200, completion("x"))});
    int sleeps = 0;
    HttpBackend backend(real_cfg(), t, [&](std::chrono::milliseconds) { ++sleeps; });
    EXPECT_THROW(backend.complete(request()), AuthError);
    EXPECT_EQ(t->calls, 1);
    EXPECT_EQ(sleeps, 0);
  }
}

TEST_F(KeyEnv, ExhaustsAfterMaxRetries) {
  HttpReply fail;
  fail.transport_error = true;
  fail.error = "connection refused";
  auto t = std::make_shared<ScriptedTransport>(std::deque<HttpReply>{fail});
  HttpBackend backend(real_cfg(), t, [](std::chrono::milliseconds) {});
  EXPECT_THROW(backend.complete(request()), GatewayExhausted);
  EXPECT_EQ(t->calls, 4);
}

TEST_F(KeyEnv, OtherClientErrorsAreNotRetried) {
  auto t = std::make_shared<ScriptedTransport>(std::deque<HttpReply>{reply(400, "bad")});
  HttpBackend backend(real_cfg(), t, [](std::chrono::milliseconds) {});
  EXPECT_THROW(backend.complete(request()), GatewayExhausted);
  EXPECT_EQ(t->calls, 1);
}

TEST_F(KeyEnv, BackoffGrowsAndStaysInBand) {
  HttpBackend backend(real_cfg(), std::make_shared<ScriptedTransport>(std::deque<HttpReply>{reply(200, "")}),
                      [](std::chrono::milliseconds) {});
  for (int attempt = 0; attempt < 5; ++attempt) {
    const auto full = 10 << attempt;
    for (std::uint64_t s = 0; s < 20; ++s) {
      const auto d = backend.backoff_delay(attempt, s).count();
      EXPECT_GE(d, full / 2);
      EXPECT_LE(d, full);
    }
  }
}

TEST_F(KeyEnv, MissingKeyInBackendIsReported) {
  ::unsetenv("FIGSYNTH_TEST_KEY");
  HttpBackend backend(real_cfg(), std::make_shared<ScriptedTransport>(std::deque<HttpReply>{reply(200, "")}),
                      [](std::chrono::milliseconds) {});
  EXPECT_THROW(backend.complete(request()), MissingApiKey);
}

// Round trip against a local server speaking the chat-completions subset.
TEST_F(KeyEnv, LocalServerRoundTrip) {
  httplib::Server server;
  std::atomic<int> hits{0};
  std::string seen_auth, seen_model;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    if (hits++ == 0) {
      res.status = 429;
      return;
    }
    seen_auth = req.get_header_value("Authorization");
    const json body = json::parse(req.body);
    seen_model = body["model"];
    res.set_content(completion("echo: " + body["messages"][1]["content"].get<std::string>()),
                    "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  HttpBackend backend(real_cfg("http://127.0.0.1:" + std::to_string(port) + "/v1/"), nullptr,
                      [](std::chrono::milliseconds) {});
  const ChatResponse resp = backend.complete(request("ping"));
  server.stop();
  th.join();
  EXPECT_EQ(resp.text, "echo: ping");
  EXPECT_EQ(resp.retries, 1);
  EXPECT_EQ(seen_auth, "Bearer sk-test");
  EXPECT_EQ(seen_model, "test-model");
}

class SlowBackend : public ChatBackend {
 public:
  ChatResponse complete(const ChatRequest&) override {
    const int now = ++in_flight;
    int seen = peak.load();
    while (now > seen && !peak.compare_exchange_weak(seen, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
    --in_flight;
    return {"ok", "slow", 0, 0};
  }
  std::atomic<int> in_flight{0};
  std::atomic<int> peak{0};
};

TEST(Gateway, InFlightNeverExceedsLimit) {
  auto backend = std::make_shared<SlowBackend>();
  Gateway gw(backend, 3);
  std::vector<std::thread> threads;
  for (int i = 0; i < 12; ++i) {
    threads.emplace_back([&] {
      for (int k = 0; k < 5; ++k) gw.complete(request());
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_LE(backend->peak.load(), 3);
  EXPECT_GE(backend->peak.load(), 2);
  EXPECT_EQ(backend->in_flight.load(), 0);
}

TEST(Gateway, RejectsBadLimit) {
  EXPECT_THROW(Gateway(std::make_shared<MockBackend>(1), 0), ConfigError);
  EXPECT_THROW(Gateway(nullptr, 2), ConfigError);
}

}  // namespace
}  // namespace figsynth
