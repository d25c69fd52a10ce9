#include "figsynth/gateway.hpp"

#include <cstdlib>
#include <sstream>
#include <thread>

#include "figsynth/chart_model.hpp"
#include "figsynth/errors.hpp"
#include "figsynth/qa.hpp"
#include "figsynth/rng.hpp"
#include "figsynth/synthetic.hpp"

namespace figsynth {

using nlohmann::json;

std::string_view stage_tag_name(StageTag tag) {
  switch (tag) {
    case StageTag::Topic:
      return "topic";
    case StageTag::Qa:
      return "qa";
    case StageTag::Data:
      break;
  }
  return "data";
}

std::string stage_marker(StageTag tag) { return "#stage:" + std::string(stage_tag_name(tag)); }

void GatewayConfig::validate() const {
  if (max_retries < 0) throw ConfigError("gateway.max_retries must be >= 0");
  if (base_backoff_ms < 0) throw ConfigError("gateway.base_backoff_ms must be >= 0");
  if (max_concurrent_requests < 1) throw ConfigError("gateway.max_concurrent_requests must be >= 1");
  if (mode == GatewayMode::Mock) return;
  if (endpoint_url.empty()) throw ConfigError("gateway.endpoint_url is required in real mode");
  if (model.empty()) throw ConfigError("gateway.model is required in real mode");
  if (api_key_env.empty()) throw ConfigError("gateway.api_key_env is required in real mode");
  const char* key = std::getenv(api_key_env.c_str());
  if (!key || !*key) {
    throw MissingApiKey("environment variable " + api_key_env + " is not set");
  }
}

json to_json(const GatewayConfig& cfg) {
  return {{"mode", cfg.mode == GatewayMode::Real ? "real" : "mock"},
          {"endpoint_url", cfg.endpoint_url},
          {"api_key_env", cfg.api_key_env},
          {"model", cfg.model},
          {"max_retries", cfg.max_retries},
          {"base_backoff_ms", cfg.base_backoff_ms},
          {"max_concurrent_requests", cfg.max_concurrent_requests},
          {"timeout_ms", cfg.timeout_ms},
          {"mock_seed", cfg.mock_seed}};
}

GatewayConfig gateway_config_from_json(const json& j) {
  GatewayConfig cfg;
  if (!j.is_object()) throw ConfigError("gateway section must be an object");
  try {
    const std::string mode = j.value("mode", std::string("mock"));
    if (mode == "real") {
      cfg.mode = GatewayMode::Real;
    } else if (mode == "mock") {
      cfg.mode = GatewayMode::Mock;
    } else {
      throw ConfigError("gateway.mode must be 'real' or 'mock'");
    }
    cfg.endpoint_url = j.value("endpoint_url", cfg.endpoint_url);
    cfg.api_key_env = j.value("api_key_env", cfg.api_key_env);
    cfg.model = j.value("model", cfg.model);
    cfg.max_retries = j.value("max_retries", cfg.max_retries);
    cfg.base_backoff_ms = j.value("base_backoff_ms", cfg.base_backoff_ms);
    cfg.max_concurrent_requests = j.value("max_concurrent_requests", cfg.max_concurrent_requests);
    cfg.timeout_ms = j.value("timeout_ms", cfg.timeout_ms);
    cfg.mock_seed = j.value("mock_seed", cfg.mock_seed);
    if (j.contains("api_key")) {
      throw ConfigError("API keys are read from the environment; remove gateway.api_key");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad gateway section: ") + e.what());
  }
  return cfg;
}

std::string prompt_marker(const ChatRequest& req, std::string_view key) {
  const std::string needle = "#" + std::string(key) + ":";
  std::istringstream in(req.system);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind(needle, 0) == 0) {
      std::string value = line.substr(needle.size());
      while (!value.empty() && (value.back() == ' ' || value.back() == '\r')) value.pop_back();
      return value;
    }
  }
  return {};
}

StageTag classify_prompt(const ChatRequest& req) {
  const std::string tag = prompt_marker(req, "stage");
  if (tag == "topic") return StageTag::Topic;
  if (tag == "qa") return StageTag::Qa;
  return StageTag::Data;
}

// ---------------------------------------------------------------------------
// Mock backend

namespace {

ChartType mock_chart_type(const ChatRequest& req) {
  return chart_type_from_name(prompt_marker(req, "chart-type")).value_or(ChartType::VBar);
}

std::string after_line_prefix(const std::string& text, std::string_view prefix) {
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind(prefix, 0) == 0) return line.substr(prefix.size());
  }
  return {};
}

std::string mock_topics(const ChatRequest& req, Rng& rng) {
  int count = 20;
  const std::string requested = prompt_marker(req, "count");
  if (!requested.empty()) count = std::max(1, std::atoi(requested.c_str()));
  std::ostringstream out;
  out << "Here are some topics:\n";
  for (int i = 1; i <= count; ++i) out << i << ". " << random_topic(rng) << "\n";
  return out.str();
}

std::string mock_data(const ChatRequest& req, Rng& rng) {
  const ChartType type = mock_chart_type(req);
  std::string topic = after_line_prefix(req.user, "Topic: ");
  if (topic.empty()) topic = random_topic(rng);
  const ChartData data = random_chart_data(type, rng, topic);
  json j = to_json(data);
  j.erase("topic");
  j.erase("chart_type");
  return "```json\n" + dump_canonical(j) + "\n```\n";
}

std::string mock_qa(const ChatRequest& req, Rng& rng) {
  const auto pos = req.user.find(kQaPromptDataHeader);
  const std::string_view tail =
      pos == std::string::npos ? std::string_view(req.user)
                               : std::string_view(req.user).substr(pos);
  auto data_json = extract_json(tail, '{');
  json items = json::array();
  if (data_json) {
    try {
      json full = *data_json;
      full["chart_type"] = std::string(chart_type_name(mock_chart_type(req)));
      const ChartData data = chart_data_from_json(full);
      for (const QAPair& qa : instantiate_templates(data, rng, 4)) {
        items.push_back({{"question", qa.question}, {"answer", qa.answer}});
      }
      items.push_back({{"question", "What is the main topic of the chart?"},
                       {"answer", data.title}});
    } catch (const Error&) {
      items.clear();
    }
  }
  return "```json\n" + items.dump(2) + "\n```\n";
}

}  // namespace

ChatResponse MockBackend::complete(const ChatRequest& req) {
  if (req.user.empty()) throw ConfigError("chat request has an empty user message");
  Rng rng(mix64(seed_ ^ fnv1a64(req.user)));
  ChatResponse resp;
  resp.backend_id = "mock";
  switch (classify_prompt(req)) {
    case StageTag::Topic:
      resp.text = mock_topics(req, rng);
      break;
    case StageTag::Qa:
      resp.text = mock_qa(req, rng);
      break;
    case StageTag::Data:
      resp.text = mock_data(req, rng);
      break;
  }
  return resp;
}

// ---------------------------------------------------------------------------
// HTTP backend

std::string build_chat_body(const ChatRequest& req, const std::string& default_model) {
  json body = {
      {"model", req.model.empty() ? default_model : req.model},
      {"messages",
       json::array({{{"role", "system"}, {"content", req.system}},
                    {{"role", "user"}, {"content", req.user}}})},
      {"temperature", req.temperature},
      {"max_tokens", req.max_tokens},
  };
  return body.dump(-1, ' ', false, json::error_handler_t::replace);
}

std::string parse_chat_reply(const std::string& body) {
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded()) throw ParseFailure("completion reply is not JSON");
  try {
    const json& content = j.at("choices").at(0).at("message").at("content");
    return content.is_null() ? std::string() : content.get<std::string>();
  } catch (const json::exception&) {
    throw ParseFailure("completion reply lacks choices[0].message.content");
  }
}

HttpBackend::HttpBackend(GatewayConfig cfg, std::shared_ptr<HttpTransport> transport,
                         Sleeper sleeper)
    : cfg_(std::move(cfg)),
      transport_(transport ? std::move(transport) : make_default_transport()),
      sleeper_(sleeper ? std::move(sleeper)
                       : Sleeper([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); })) {}

std::chrono::milliseconds HttpBackend::backoff_delay(int attempt, std::uint64_t jitter_seed) const {
  const long long full = static_cast<long long>(cfg_.base_backoff_ms) << std::min(attempt, 20);
  const long long half = full / 2;
  Rng rng(mix64(jitter_seed + static_cast<std::uint64_t>(attempt)));
  return std::chrono::milliseconds(half + (full - half > 0 ? rng.between(0, full - half) : 0));
}

ChatResponse HttpBackend::complete(const ChatRequest& req) {
  if (req.user.empty()) throw ConfigError("chat request has an empty user message");
  const char* key = std::getenv(cfg_.api_key_env.c_str());
  if (!key || !*key) throw MissingApiKey("environment variable " + cfg_.api_key_env + " is not set");

  std::string url = cfg_.endpoint_url;
  while (!url.empty() && url.back() == '/') url.pop_back();
  url += "/chat/completions";
  const HttpHeaders headers = {{"Authorization", std::string("Bearer ") + key},
                               {"Content-Type", "application/json"}};
  const std::string body = build_chat_body(req, cfg_.model);
  const std::uint64_t jitter_seed = fnv1a64(req.user);

  const auto start = std::chrono::steady_clock::now();
  std::string last_error;
  for (int attempt = 0;; ++attempt) {
    const HttpReply reply = transport_->post(url, headers, body, cfg_.timeout_ms);
    if (!reply.transport_error) {
      if (reply.status == 401 || reply.status == 403) {
        throw AuthError("chat endpoint rejected credentials (HTTP " +
                        std::to_string(reply.status) + ")");
      }
      if (reply.status >= 200 && reply.status < 300) {
        try {
          ChatResponse resp;
          resp.text = parse_chat_reply(reply.body);
          resp.backend_id = "http:" + cfg_.model;
          resp.retries = attempt;
          resp.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                                std::chrono::steady_clock::now() - start)
                                .count();
          return resp;
        } catch (const ParseFailure& e) {
          last_error = e.what();
        }
      } else if (reply.status == 429 || reply.status >= 500) {
        last_error = "HTTP " + std::to_string(reply.status);
      } else {
        throw GatewayExhausted("chat endpoint returned HTTP " + std::to_string(reply.status) +
                               ": " + reply.body.substr(0, 200));
      }
    } else {
      last_error = reply.error.empty() ? "transport failure" : reply.error;
    }
    if (attempt >= cfg_.max_retries) break;
    sleeper_(backoff_delay(attempt, jitter_seed));
  }
  throw GatewayExhausted("gave up after " + std::to_string(cfg_.max_retries) +
                         " retries: " + last_error);
}

// ---------------------------------------------------------------------------
// Gateway

namespace {

std::shared_ptr<ChatBackend> make_backend(const GatewayConfig& cfg) {
  cfg.validate();
  if (cfg.mode == GatewayMode::Mock) return std::make_shared<MockBackend>(cfg.mock_seed);
  return std::make_shared<HttpBackend>(cfg);
}

}  // namespace

Gateway::Gateway(const GatewayConfig& cfg)
    : Gateway(make_backend(cfg), cfg.max_concurrent_requests) {}

Gateway::Gateway(std::shared_ptr<ChatBackend> backend, int max_concurrent_requests)
    : backend_(std::move(backend)), limit_(max_concurrent_requests) {
  if (!backend_) throw ConfigError("gateway needs a backend");
  if (limit_ < 1) throw ConfigError("max_concurrent_requests must be >= 1");
}

ChatResponse Gateway::complete(const ChatRequest& req) {
  {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return in_flight_ < limit_; });
    ++in_flight_;
  }
  struct Release {
    Gateway* self;
    ~Release() {
      {
        std::lock_guard lock(self->mutex_);
        --self->in_flight_;
      }
      self->cv_.notify_one();
    }
  } release{this};
  const auto start = std::chrono::steady_clock::now();
  ChatResponse resp = backend_->complete(req);
  if (resp.latency_ms == 0 && resp.backend_id != "mock") {
    resp.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                          std::chrono::steady_clock::now() - start)
                          .count();
  }
  return resp;
}

ChatResponse complete(const ChatRequest& req, const GatewayConfig& cfg) {
  return make_backend(cfg)->complete(req);
}

}  // namespace figsynth
