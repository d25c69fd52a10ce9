#include "httplib.h"

#include "figsynth/gateway.hpp"

namespace figsynth {

namespace {

// Splits "https://host:port/v1/chat" into ("https://host:port", "/v1/chat").
std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  const auto host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
  const auto path_start = url.find('/', host_start);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

class HttplibTransport : public HttpTransport {
 public:
  HttpReply post(const std::string& url, const HttpHeaders& headers, const std::string& body,
                 int timeout_ms) override {
    const auto [base, path] = split_url(url);
    httplib::Client client(base);
    const auto timeout = std::chrono::milliseconds(timeout_ms);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);

    httplib::Headers hdrs;
    std::string content_type = "application/json";
    for (const auto& [k, v] : headers) {
      if (k == "Content-Type") {
        content_type = v;
      } else {
        hdrs.emplace(k, v);
      }
    }
    HttpReply reply;
    auto res = client.Post(path, hdrs, body, content_type);
    if (!res) {
      reply.transport_error = true;
      reply.error = httplib::to_string(res.error());
      return reply;
    }
    reply.status = res->status;
    reply.body = res->body;
    return reply;
  }
};

}  // namespace

std::shared_ptr<HttpTransport> make_default_transport() {
  return std::make_shared<HttplibTransport>();
}

}  // namespace figsynth
