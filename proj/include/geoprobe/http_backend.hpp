#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "geoprobe/backend.hpp"

namespace geoprobe {

inline constexpr std::string_view kApiKeyEnv = "GEOPROBE_API_KEY";

struct HttpEndpoint {
  std::string url;  // full chat-completions URL, http or https
  std::chrono::seconds timeout{120};
};

struct RetryPolicy {
  std::chrono::milliseconds base_delay{1000};
  double factor = 2.0;
  int max_attempts = 5;

  // Delay before retry number `retry` (1-based).
  std::chrono::milliseconds delay_for(int retry) const;
};

struct HttpResponse {
  int status = 0;  // 0: transport failure (no HTTP status)
  std::string body;
  std::string error;
};

using HttpHeaders = std::vector<std::pair<std::string, std::string>>;

class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse post(const std::string& url, const HttpHeaders& headers, const std::string& body,
                            std::chrono::seconds timeout) = 0;
};

// cpp-httplib; one client per request.
class HttplibTransport final : public HttpTransport {
 public:
  HttpResponse post(const std::string& url, const HttpHeaders& headers, const std::string& body,
                    std::chrono::seconds timeout) override;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

bool is_retryable_status(int status);

// {model, messages: [{role: "user", content: prompt}], temperature, max_tokens}
std::string build_chat_request(std::string_view prompt, const GenerationParams& params);

// choices[0].message.content; ProtocolError otherwise.
std::string parse_chat_response(std::string_view body);

// OpenAI-style chat-completion client.
class HttpBackend final : public Backend {
 public:
  // Reads the API key from GEOPROBE_API_KEY; ConfigError when unset.
  explicit HttpBackend(HttpEndpoint endpoint, std::shared_ptr<HttpTransport> transport = nullptr,
                       RetryPolicy retry = {}, Sleeper sleeper = nullptr);
  HttpBackend(HttpEndpoint endpoint, std::string api_key, std::shared_ptr<HttpTransport> transport,
              RetryPolicy retry = {}, Sleeper sleeper = nullptr);

  std::string generate(std::string_view prompt, const GenerationParams& params) override;
  std::string id() const override { return "http:" + endpoint_.url; }

 private:
  HttpEndpoint endpoint_;
  std::string api_key_;
  std::shared_ptr<HttpTransport> transport_;
  RetryPolicy retry_;
  Sleeper sleeper_;
};

std::string http_complete(HttpBackend& backend, std::string_view prompt, const GenerationParams& params);

}  // namespace geoprobe
