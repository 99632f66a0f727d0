#pragma once

// Adapter for completion-style HTTP APIs that return either top-k token
// log-probabilities for a single generated token or sampled completions.

#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "decoylab/backend.hpp"

namespace decoylab {

struct HttpResponse {
  int status = 0;
  std::string body;
};

using HttpHeaders = std::vector<std::pair<std::string, std::string>>;

// Throws TransientError when the request never produced a response.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse post(const std::string& path, const std::string& body, const HttpHeaders& headers) = 0;
};

std::unique_ptr<HttpTransport> make_http_transport(const std::string& base_url, std::chrono::seconds timeout);

struct RemoteConfig {
  std::string endpoint;  // scheme://host[:port]
  std::string path = "/v1/completions";
  std::string model;
  std::string api_key_env;  // name of the variable holding the credential
  BackendCapability capability;
  int max_retries = 5;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::milliseconds max_backoff{16000};
  std::chrono::seconds timeout{60};
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;
using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

std::optional<std::string> getenv_lookup(const std::string& name);

// Request body for one prompt under the configured decoding parameters.
std::string build_completion_request(const RemoteConfig& config, const std::string& prompt);

// Parses a completion response; MalformedResponse keeps the body.
RawOutput parse_completion_response(const RemoteConfig& config, const std::string& body);

class RemoteBackend : public Backend {
 public:
  RemoteBackend(RemoteConfig config, std::unique_ptr<HttpTransport> transport, Sleeper sleeper = {},
                EnvLookup env = getenv_lookup);

  std::string id() const override;
  BackendCapability capability() const override { return config_.capability; }
  RawOutput complete(const Request& request) override;

  // Sends one prompt with retries; RawOutput::retries counts the failed attempts.
  RawOutput remote_complete(const std::string& prompt);

 private:
  RemoteConfig config_;
  std::unique_ptr<HttpTransport> transport_;
  Sleeper sleep_;
  std::string credential_;
};

}  // namespace decoylab
