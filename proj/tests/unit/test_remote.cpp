#include <gtest/gtest.h>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include <atomic>
#include <deque>
#include <thread>

#include "decoylab/errors.hpp"
#include "decoylab/remote.hpp"
#include "json.hpp"

using namespace decoylab;
using nlohmann::json;

namespace {

struct Scripted {
  int status = 200;
  std::string body;
  bool drop = false;  // simulate a connection failure
};

class FakeTransport : public HttpTransport {
 public:
  explicit FakeTransport(std::deque<Scripted> script) : script_(std::move(script)) {}
  HttpResponse post(const std::string& path, const std::string& body, const HttpHeaders& headers) override {
    paths.push_back(path);
    bodies.push_back(body);
    last_headers = headers;
    if (script_.empty()) throw std::logic_error("script exhausted");
    Scripted s = script_.front();
    if (script_.size() > 1) script_.pop_front();
    if (s.drop) throw TransientError("connection reset");
    return {s.status, s.body};
  }
  std::vector<std::string> paths, bodies;
  HttpHeaders last_headers;

 private:
  std::deque<Scripted> script_;
};

std::string logprob_body() {
  return R"({"choices":[{"text":"A","logprobs":{"top_logprobs":[{" B":-1.2,"A":-0.4,"The":-3.0}]}}]})";
}

RemoteConfig config(DecodingMode mode = DecodingMode::TokenLogprobs) {
  RemoteConfig c;
  c.endpoint = "http://127.0.0.1:1";
  c.model = "test-model";
  c.api_key_env = "DECOYLAB_TEST_KEY";
  c.capability = {mode, 20, 0.7};
  return c;
}

EnvLookup fixed_env(std::optional<std::string> value) {
  return [value](const std::string&) { return value; };
}

struct Harness {
  std::vector<std::chrono::milliseconds> sleeps;
  FakeTransport* transport = nullptr;
  std::unique_ptr<RemoteBackend> backend;

  Harness(std::deque<Scripted> script, RemoteConfig cfg = config()) {
    auto t = std::make_unique<FakeTransport>(std::move(script));
    transport = t.get();
    backend = std::make_unique<RemoteBackend>(
        cfg, std::move(t), [this](std::chrono::milliseconds d) { sleeps.push_back(d); }, fixed_env("sk-test"));
  }
};

}  // namespace

TEST(RequestBody, LogprobsMode) {
  const auto body = json::parse(build_completion_request(config(), "Pick one."));
  EXPECT_EQ(body.at("model"), "test-model");
  EXPECT_EQ(body.at("prompt"), "Pick one.");
  EXPECT_EQ(body.at("max_tokens"), 1);
  EXPECT_EQ(body.at("logprobs"), 20);
  EXPECT_EQ(body.at("temperature"), 0);
}

TEST(RequestBody, SamplingMode) {
  const auto body = json::parse(build_completion_request(config(DecodingMode::SampleOnly), "x"));
  EXPECT_FALSE(body.contains("logprobs"));
  EXPECT_DOUBLE_EQ(body.at("temperature").get<double>(), 0.7);
  EXPECT_EQ(body.at("n"), 1);
}

TEST(ParseResponse, TopLogprobsSortedDescending) {
  const auto out = parse_completion_response(config(), logprob_body());
  ASSERT_EQ(out.top_logprobs.size(), 3u);
  EXPECT_EQ(out.top_logprobs[0].token, "A");
  EXPECT_EQ(out.top_logprobs[1].token, " B");
  EXPECT_DOUBLE_EQ(out.top_logprobs[2].logprob, -3.0);
}

TEST(ParseResponse, SampledText) {
  const auto out = parse_completion_response(config(DecodingMode::SampleOnly), R"({"choices":[{"text":" C"}]})");
  EXPECT_EQ(out.samples, std::vector<std::string>{" C"});
}

TEST(ParseResponse, MalformedKeepsTheBody) {
  for (const std::string body : {"<html>oops</html>", R"({"choices":[]})", R"({"choices":[{"logprobs":{"top_logprobs":[{}]}}]})"}) {
    try {
      parse_completion_response(config(), body);
      FAIL() << body;
    } catch (const MalformedResponse& e) {
      EXPECT_EQ(e.body(), body);
    }
  }
}

TEST(Retry, TwoTransientFailuresThenSuccess) {
  Harness h({{503, "busy"}, {0, "", true}, {200, logprob_body()}});
  const auto out = h.backend->remote_complete("prompt");
  EXPECT_EQ(out.retries, 2);
  EXPECT_EQ(h.transport->bodies.size(), 3u);
  ASSERT_EQ(h.sleeps.size(), 2u);
  EXPECT_EQ(h.sleeps[0].count(), 500);
  EXPECT_EQ(h.sleeps[1].count(), 1000);
  EXPECT_EQ(h.transport->paths[0], "/v1/completions");
}

TEST(Retry, BackoffIsCapped) {
  auto cfg = config();
  cfg.max_retries = 8;
  cfg.max_backoff = std::chrono::milliseconds(3000);
  Harness h({{500, "err"}}, cfg);
  EXPECT_THROW(h.backend->remote_complete("p"), TransientError);
  ASSERT_EQ(h.sleeps.size(), 8u);
  EXPECT_EQ(h.sleeps[2].count(), 2000);
  EXPECT_EQ(h.sleeps[3].count(), 3000);
  EXPECT_EQ(h.sleeps.back().count(), 3000);
  EXPECT_EQ(h.transport->bodies.size(), 9u);
}

TEST(Retry, RateLimitExhaustion) {
  Harness h({{429, "slow down"}});
  try {
    h.backend->remote_complete("p");
    FAIL();
  } catch (const RateLimitError& e) {
    EXPECT_NE(std::string(e.what()).find("6 attempts"), std::string::npos);
  }
}

TEST(Retry, AuthFailureIsNotRetried) {
  Harness h({{401, "bad key"}, {200, logprob_body()}});
  EXPECT_THROW(h.backend->remote_complete("p"), AuthError);
  EXPECT_EQ(h.transport->bodies.size(), 1u);
  EXPECT_TRUE(h.sleeps.empty());
}

TEST(Retry, ClientErrorIsNotRetried) {
  Harness h({{400, "bad request"}});
  EXPECT_THROW(h.backend->remote_complete("p"), BackendError);
  EXPECT_EQ(h.transport->bodies.size(), 1u);
}

TEST(Retry, MalformedSuccessIsNotRetried) {
  Harness h({{200, "not json"}, {200, logprob_body()}});
  EXPECT_THROW(h.backend->remote_complete("p"), MalformedResponse);
  EXPECT_EQ(h.transport->bodies.size(), 1u);
}

TEST(Credential, ComesFromTheNamedVariable) {
  Harness h({{200, logprob_body()}});
  h.backend->remote_complete("p");
  ASSERT_EQ(h.transport->last_headers.size(), 1u);
  EXPECT_EQ(h.transport->last_headers[0].second, "Bearer sk-test");
  // The credential never appears in the request body or backend id.
  EXPECT_EQ(h.transport->bodies[0].find("sk-test"), std::string::npos);
  EXPECT_EQ(h.backend->id().find("sk-test"), std::string::npos);
}

TEST(Credential, MissingVariableIsAnAuthError) {
  std::string seen;
  EXPECT_THROW(RemoteBackend(config(), std::make_unique<FakeTransport>(std::deque<Scripted>{}), {},
                             [&](const std::string& name) {
                               seen = name;
                               return std::optional<std::string>{};
                             }),
               AuthError);
  EXPECT_EQ(seen, "DECOYLAB_TEST_KEY");
  auto cfg = config();
  cfg.api_key_env.clear();
  EXPECT_THROW(RemoteBackend(cfg, std::make_unique<FakeTransport>(std::deque<Scripted>{}), {}, fixed_env("x")),
               ConfigError);
}

TEST(LocalServer, RoundTripOverHttp) {
  httplib::Server server;
  std::atomic<int> hits{0};
  std::string auth;
  server.Post("/v1/completions", [&](const httplib::Request& req, httplib::Response& res) {
    if (hits.fetch_add(1) == 0) {
      res.status = 503;
      return;
    }
    auth = req.get_header_value("Authorization");
    const auto body = json::parse(req.body);
    EXPECT_EQ(body.at("prompt"), "hello");
    res.set_content(logprob_body(), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  auto cfg = config();
  cfg.endpoint = "http://127.0.0.1:" + std::to_string(port);
  cfg.initial_backoff = std::chrono::milliseconds(1);
  RemoteBackend backend(cfg, make_http_transport(cfg.endpoint, std::chrono::seconds(5)), {}, fixed_env("sk-local"));
  const auto out = backend.remote_complete("hello");
  server.stop();
  thread.join();

  EXPECT_EQ(out.retries, 1);
  EXPECT_EQ(out.top_logprobs.front().token, "A");
  EXPECT_EQ(auth, "Bearer sk-local");
  EXPECT_EQ(hits.load(), 2);
}

TEST(LocalServer, UnreachableEndpointIsTransient) {
  auto cfg = config();
  cfg.max_retries = 1;
  cfg.initial_backoff = std::chrono::milliseconds(1);
  RemoteBackend backend(cfg, make_http_transport("http://127.0.0.1:1", std::chrono::seconds(2)), {},
                        fixed_env("k"));
  EXPECT_THROW(backend.remote_complete("p"), TransientError);
}
