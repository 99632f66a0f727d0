#include "decoylab/remote.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include <algorithm>
#include <cstdlib>
#include <thread>

#include "decoylab/errors.hpp"
#include "json.hpp"

namespace decoylab {

using nlohmann::json;

namespace {

class HttplibTransport : public HttpTransport {
 public:
  HttplibTransport(const std::string& base_url, std::chrono::seconds timeout) : base_url_(base_url), timeout_(timeout) {}

  HttpResponse post(const std::string& path, const std::string& body, const HttpHeaders& headers) override {
    // httplib clients are not safe to share across threads.
    httplib::Client client(base_url_);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    httplib::Headers h;
    for (const auto& [k, v] : headers) h.emplace(k, v);
    auto result = client.Post(path, h, body, "application/json");
    if (!result) throw TransientError("request to " + base_url_ + path + " failed: " + httplib::to_string(result.error()));
    return {result->status, result->body};
  }

 private:
  std::string base_url_;
  std::chrono::seconds timeout_;
};

bool retryable(int status) { return status == 408 || status == 409 || status == 429 || status >= 500; }

}  // namespace

std::unique_ptr<HttpTransport> make_http_transport(const std::string& base_url, std::chrono::seconds timeout) {
  return std::make_unique<HttplibTransport>(base_url, timeout);
}

std::optional<std::string> getenv_lookup(const std::string& name) {
  if (const char* v = std::getenv(name.c_str()); v != nullptr && *v != '\0') return std::string(v);
  return std::nullopt;
}

std::string build_completion_request(const RemoteConfig& config, const std::string& prompt) {
  json body = {{"model", config.model}, {"prompt", prompt}, {"max_tokens", 1}};
  if (config.capability.mode == DecodingMode::TokenLogprobs) {
    body["logprobs"] = config.capability.top_k;
    body["temperature"] = 0;
  } else {
    body["temperature"] = config.capability.temperature;
    body["n"] = 1;
  }
  return body.dump();
}

RawOutput parse_completion_response(const RemoteConfig& config, const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error& e) {
    throw MalformedResponse(std::string("response is not JSON: ") + e.what(), body);
  }
  try {
    const json& choice = j.at("choices").at(0);
    RawOutput out;
    if (config.capability.mode == DecodingMode::TokenLogprobs) {
      const json& top = choice.at("logprobs").at("top_logprobs").at(0);
      if (!top.is_object() || top.empty()) throw MalformedResponse("empty top_logprobs", body);
      for (const auto& [token, lp] : top.items()) out.top_logprobs.push_back({token, lp.get<double>()});
      std::sort(out.top_logprobs.begin(), out.top_logprobs.end(),
                [](const TokenLogprob& a, const TokenLogprob& b) { return a.logprob > b.logprob; });
    } else {
      out.samples.push_back(choice.at("text").get<std::string>());
    }
    return out;
  } catch (const json::exception& e) {
    throw MalformedResponse(std::string("unexpected response shape: ") + e.what(), body);
  }
}

RemoteBackend::RemoteBackend(RemoteConfig config, std::unique_ptr<HttpTransport> transport, Sleeper sleeper,
                             EnvLookup env)
    : config_(std::move(config)), transport_(std::move(transport)), sleep_(std::move(sleeper)) {
  config_.capability.validate();
  if (!sleep_) sleep_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  if (config_.api_key_env.empty()) throw ConfigError("remote backend needs api_key_env");
  auto key = env(config_.api_key_env);
  if (!key) throw AuthError("environment variable " + config_.api_key_env + " is not set");
  credential_ = std::move(*key);
}

std::string RemoteBackend::id() const { return "remote:" + config_.endpoint + config_.path + ":" + config_.model; }

RawOutput RemoteBackend::complete(const Request& request) { return remote_complete(request.prompt.text); }

RawOutput RemoteBackend::remote_complete(const std::string& prompt) {
  const std::string body = build_completion_request(config_, prompt);
  const HttpHeaders headers = {{"Authorization", "Bearer " + credential_}};
  auto delay = config_.initial_backoff;
  int failures = 0;
  std::string last_error;
  bool rate_limited = false;
  for (;;) {
    try {
      const HttpResponse resp = transport_->post(config_.path, body, headers);
      if (resp.status == 401 || resp.status == 403) {
        throw AuthError("endpoint rejected the credential (HTTP " + std::to_string(resp.status) + ")");
      }
      if (resp.status >= 200 && resp.status < 300) {
        RawOutput out = parse_completion_response(config_, resp.body);
        out.retries = failures;
        return out;
      }
      if (!retryable(resp.status)) {
        throw BackendError("HTTP " + std::to_string(resp.status) + ": " + resp.body.substr(0, 200));
      }
      rate_limited = resp.status == 429;
      last_error = "HTTP " + std::to_string(resp.status);
    } catch (const TransientError& e) {
      rate_limited = false;
      last_error = e.what();
    }
    if (failures >= config_.max_retries) break;
    ++failures;
    sleep_(delay);
    delay = std::min(delay * 2, config_.max_backoff);
  }
  const std::string msg = "giving up after " + std::to_string(failures + 1) + " attempts: " + last_error;
  if (rate_limited) throw RateLimitError(msg);
  throw TransientError(msg);
}

}  // namespace decoylab
