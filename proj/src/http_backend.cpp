#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "geoprobe/http_backend.hpp"

#include <cmath>
#include <cstdlib>
#include <regex>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "geoprobe/error.hpp"

namespace geoprobe {

using nlohmann::json;

std::chrono::milliseconds RetryPolicy::delay_for(int retry) const {
  const double scale = std::pow(factor, std::max(0, retry - 1));
  return std::chrono::milliseconds(static_cast<std::int64_t>(static_cast<double>(base_delay.count()) * scale));
}

bool is_retryable_status(int status) { return status == 0 || status == 408 || status == 429 || status >= 500; }

HttpResponse HttplibTransport::post(const std::string& url, const HttpHeaders& headers, const std::string& body,
                                    std::chrono::seconds timeout) {
  static const std::regex url_re(R"(^(https?://[^/]+)(/.*)?$)", std::regex::icase);
  std::smatch m;
  if (!std::regex_match(url, m, url_re)) return {0, {}, "malformed endpoint URL '" + url + "'"};
  const std::string origin = m[1].str();
  const std::string path = m[2].matched ? m[2].str() : "/";

  httplib::Client client(origin);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  httplib::Headers h;
  for (const auto& [k, v] : headers) h.emplace(k, v);

  auto res = client.Post(path, h, body, "application/json");
  if (!res) return {0, {}, httplib::to_string(res.error())};
  return {res->status, res->body, {}};
}

std::string build_chat_request(std::string_view prompt, const GenerationParams& params) {
  json body = {
      {"model", params.model},
      {"messages", json::array({json{{"role", "user"}, {"content", prompt}}})},
      {"temperature", params.temperature},
      {"max_tokens", params.max_tokens},
  };
  return body.dump();
}

std::string parse_chat_response(std::string_view body) {
  try {
    const auto doc = json::parse(body);
    const auto& content = doc.at("choices").at(0).at("message").at("content");
    if (!content.is_string()) throw Error(ErrorKind::ProtocolError, "choices[0].message.content is not a string");
    return content.get<std::string>();
  } catch (const json::exception& ex) {
    throw Error(ErrorKind::ProtocolError, std::string("malformed chat-completion response: ") + ex.what());
  }
}

namespace {

std::string api_key_from_env() {
  const char* key = std::getenv(std::string(kApiKeyEnv).c_str());
  if (key == nullptr || *key == '\0') {
    throw Error(ErrorKind::ConfigError, std::string(kApiKeyEnv) + " is not set");
  }
  return key;
}

void real_sleep(std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }

}  // namespace

HttpBackend::HttpBackend(HttpEndpoint endpoint, std::shared_ptr<HttpTransport> transport, RetryPolicy retry,
                         Sleeper sleeper)
    : HttpBackend(std::move(endpoint), api_key_from_env(), std::move(transport), retry, std::move(sleeper)) {}

HttpBackend::HttpBackend(HttpEndpoint endpoint, std::string api_key, std::shared_ptr<HttpTransport> transport,
                         RetryPolicy retry, Sleeper sleeper)
    : endpoint_(std::move(endpoint)),
      api_key_(std::move(api_key)),
      transport_(transport ? std::move(transport) : std::make_shared<HttplibTransport>()),
      retry_(retry),
      sleeper_(sleeper ? std::move(sleeper) : Sleeper(real_sleep)) {
  if (endpoint_.url.empty()) throw Error(ErrorKind::ConfigError, "http backend requires an endpoint URL");
  if (api_key_.empty()) throw Error(ErrorKind::ConfigError, std::string(kApiKeyEnv) + " is not set");
  if (retry_.max_attempts < 1) throw Error(ErrorKind::ConfigError, "retry max_attempts must be >= 1");
}

std::string HttpBackend::generate(std::string_view prompt, const GenerationParams& params) {
  params.validate();
  if (params.model.empty()) throw Error(ErrorKind::InvalidParams, "http backend requires a model name");
  const auto body = build_chat_request(prompt, params);
  const HttpHeaders headers{{"Authorization", "Bearer " + api_key_}};

  HttpResponse last;
  for (int attempt = 1; attempt <= retry_.max_attempts; ++attempt) {
    last = transport_->post(endpoint_.url, headers, body, endpoint_.timeout);
    if (last.status >= 200 && last.status < 300) return parse_chat_response(last.body);
    if (!is_retryable_status(last.status)) break;
    if (attempt < retry_.max_attempts) sleeper_(retry_.delay_for(attempt));
  }
  const std::string what = last.status == 0 ? "transport error: " + last.error
                                            : "HTTP " + std::to_string(last.status);
  throw Error(ErrorKind::BackendUnavailable, endpoint_.url + ": " + what);
}

std::string http_complete(HttpBackend& backend, std::string_view prompt, const GenerationParams& params) {
  return backend.generate(prompt, params);
}

}  // namespace geoprobe
