#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

namespace figsynth {

enum class StageTag { Topic, Data, Qa };

std::string_view stage_tag_name(StageTag tag);
// The line each stage embeds in its system prompt, e.g. "#stage:topic".
std::string stage_marker(StageTag tag);

struct ChatRequest {
  std::string system;
  std::string user;
  double temperature = 0.7;
  int max_tokens = 1024;
  std::string model;
};

struct ChatResponse {
  std::string text;
  std::string backend_id;
  std::int64_t latency_ms = 0;
  int retries = 0;
};

enum class GatewayMode { Real, Mock };

struct GatewayConfig {
  GatewayMode mode = GatewayMode::Mock;
  std::string endpoint_url = "https://api.openai.com/v1";
  // Name of the environment variable holding the API key. The key itself is
  // never stored in configuration.
  std::string api_key_env = "OPENAI_API_KEY";
  std::string model = "gpt-3.5-turbo";
  int max_retries = 4;
  int base_backoff_ms = 500;
  int max_concurrent_requests = 4;
  int timeout_ms = 60000;
  std::uint64_t mock_seed = 0;

  // Throws ConfigError. In real mode this includes checking the key variable.
  void validate() const;
};

nlohmann::json to_json(const GatewayConfig& cfg);
GatewayConfig gateway_config_from_json(const nlohmann::json& j);

// Reads the "#stage:<tag>" marker from the system prompt; Data when absent.
StageTag classify_prompt(const ChatRequest& req);
// Value of a "#<key>:<value>" marker line in the system prompt, or "".
std::string prompt_marker(const ChatRequest& req, std::string_view key);

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual ChatResponse complete(const ChatRequest& req) = 0;
};

// Offline backend. Output is a pure function of (seed, request) and parses
// cleanly for the stage the request belongs to: numbered topic lines,
// ChartData JSON, or a JSON list of question/answer objects.
class MockBackend : public ChatBackend {
 public:
  explicit MockBackend(std::uint64_t seed) : seed_(seed) {}
  ChatResponse complete(const ChatRequest& req) override;

 private:
  std::uint64_t seed_;
};

struct HttpReply {
  int status = 0;
  std::string body;
  // Connection/timeout failure; status is meaningless when set.
  bool transport_error = false;
  std::string error;
};

using HttpHeaders = std::vector<std::pair<std::string, std::string>>;

class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpReply post(const std::string& url, const HttpHeaders& headers,
                         const std::string& body, int timeout_ms) = 0;
};

// cpp-httplib backed transport (http and https).
std::shared_ptr<HttpTransport> make_default_transport();

// POST {endpoint}/chat/completions body for a request.
std::string build_chat_body(const ChatRequest& req, const std::string& default_model);
// choices[0].message.content of a completion reply. Throws ParseFailure.
std::string parse_chat_reply(const std::string& body);

using Sleeper = std::function<void(std::chrono::milliseconds)>;

// OpenAI-compatible chat-completions client. Retries transport failures, 429
// and 5xx with jittered exponential backoff; 401/403 raise AuthError at once.
class HttpBackend : public ChatBackend {
 public:
  explicit HttpBackend(GatewayConfig cfg, std::shared_ptr<HttpTransport> transport = nullptr,
                       Sleeper sleeper = nullptr);
  ChatResponse complete(const ChatRequest& req) override;

  // Delay before retry number `attempt` (0-based): base * 2^attempt, with the
  // upper half jittered by `jitter_seed`.
  std::chrono::milliseconds backoff_delay(int attempt, std::uint64_t jitter_seed) const;

 private:
  GatewayConfig cfg_;
  std::shared_ptr<HttpTransport> transport_;
  Sleeper sleeper_;
};

// Shared entry point for the stages: wraps a backend and bounds the number of
// requests in flight. Safe to call from many threads.
class Gateway {
 public:
  explicit Gateway(const GatewayConfig& cfg);
  Gateway(std::shared_ptr<ChatBackend> backend, int max_concurrent_requests);

  ChatResponse complete(const ChatRequest& req);
  int max_concurrent_requests() const { return limit_; }

 private:
  std::shared_ptr<ChatBackend> backend_;
  int limit_;
  std::mutex mutex_;
  std::condition_variable cv_;
  int in_flight_ = 0;
};

// One-shot completion through a fresh backend built from `cfg`.
ChatResponse complete(const ChatRequest& req, const GatewayConfig& cfg);

}  // namespace figsynth
