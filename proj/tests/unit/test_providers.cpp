#include <atomic>
#include <cstdlib>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>

#include "repacc/error.hpp"
#include "repacc/http_provider.hpp"
#include "repacc/providers.hpp"
#include "repacc/stub_provider.hpp"
#include "repacc/text.hpp"
#include "test_util.hpp"

using namespace repacc;
using nlohmann::json;

namespace {

RetryPolicy fast_policy(int attempts) {
  RetryPolicy p;
  p.max_attempts = attempts;
  p.base = std::chrono::milliseconds(1);
  return p;
}

// Non-deterministic provider that fails transiently a set number of times.
class Flaky : public ModelProvider {
 public:
  Flaky(int failures, int permits = 4) : ModelProvider("flaky", {Capability::Generate}, permits), failures_(failures) {}
  std::string complete(const CompletionRequest&) override {
    const int now = ++inflight_;
    int seen = peak_.load();
    while (now > seen && !peak_.compare_exchange_weak(seen, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
    --inflight_;
    if (calls_++ < failures_) throw TransientProviderError(429, "slow down");
    return "fine";
  }
  int peak() const { return peak_.load(); }

 private:
  int failures_;
  std::atomic<int> calls_{0};
  std::atomic<int> inflight_{0};
  std::atomic<int> peak_{0};
};

}  // namespace

TEST(Stub, RulesMatchInOrderAndCycleResponses) {
  StubProvider p(json{{"id", "s"},
                      {"rules", {{{"contains", {"alpha", "beta"}}, {"responses", {"r1", "r2"}}},
                                 {{"contains", "alpha"}, {"response", "only-alpha"}}}}});
  EXPECT_EQ(generate(p, "", "alpha beta").text, "r1");
  EXPECT_EQ(generate(p, "", "beta alpha").text, "r2");
  EXPECT_EQ(generate(p, "", "alpha beta").text, "r1");
  EXPECT_EQ(generate(p, "", "alpha").text, "only-alpha");
  EXPECT_EQ(generate(p, "", "unrelated").text, "ok");
}

TEST(Stub, OfflineDisabledFailsWithoutRetry) {
  StubProvider p(json{{"id", "s"}, {"offline", false}});
  const auto g = generate(p, "", "nothing matches", fast_policy(5));
  EXPECT_EQ(g.record.outcome, CallOutcome::Failed);
  EXPECT_EQ(g.record.attempts, 1);
}

TEST(Generate, TransientFailuresRecover) {
  StubProvider p(json{{"id", "s"}, {"fail_first", 2}});
  CallLedger ledger;
  const auto g = generate(p, "sys", "hello", fast_policy(5), &ledger);
  EXPECT_EQ(g.text, "ok");
  EXPECT_EQ(g.record.attempts, 3);
  EXPECT_EQ(g.record.outcome, CallOutcome::RateLimitedRecovered);
  EXPECT_EQ(g.record.latency_ms, 0);
  EXPECT_EQ(ledger.size(), 1u);
}

TEST(Generate, ExhaustionYieldsFailedRecordAndThrowVariant) {
  StubProvider p(json{{"id", "s"}, {"fail_always", true}});
  const auto g = generate(p, "", "x", fast_policy(4));
  EXPECT_FALSE(g.record.ok());
  EXPECT_EQ(g.record.attempts, 4);
  EXPECT_TRUE(g.text.empty());
  try {
    generate_or_throw(p, "", "x", fast_policy(2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ProviderFailure);
  }
}

TEST(Generate, MissingCapabilityIsRejectedBeforeAnyCall) {
  StubProvider p(json{{"id", "s"}, {"capabilities", {"embed"}}});
  EXPECT_THROW(generate(p, "", "x"), Error);
  EXPECT_EQ(p.calls(), 0u);
}

TEST(Generate, BackoffScheduleIsExponentialAndReproducible) {
  Flaky p(3);
  std::vector<std::chrono::milliseconds> waits;
  RetryPolicy policy = fast_policy(5);
  policy.base = std::chrono::milliseconds(100);
  policy.sleeper = [&](std::chrono::milliseconds d) { waits.push_back(d); };
  const auto g = generate(p, "", "x", policy);
  ASSERT_EQ(waits.size(), 3u);
  for (int i = 0; i < 3; ++i) {
    const double nominal = 100.0 * std::pow(2.0, i);
    EXPECT_GE(static_cast<double>(waits[static_cast<std::size_t>(i)].count()), nominal * 0.9 - 1);
    EXPECT_LE(static_cast<double>(waits[static_cast<std::size_t>(i)].count()), nominal * 1.1 + 1);
    EXPECT_EQ(waits[static_cast<std::size_t>(i)], policy.delay(i + 1, g.record.request_digest));
  }
}

TEST(Generate, PermitsBoundConcurrency) {
  Flaky p(0, 2);
  std::vector<std::thread> ts;
  for (int i = 0; i < 8; ++i) ts.emplace_back([&, i] { generate(p, "", "q" + std::to_string(i), fast_policy(1)); });
  for (auto& t : ts) t.join();
  EXPECT_LE(p.peak(), 2);
  EXPECT_GE(p.peak(), 1);
}

TEST(Generate, RequestDigestCoversParams) {
  CompletionRequest a{"s", "u", kStudyParams};
  CompletionRequest b = a;
  b.params.temperature = 0.5;
  EXPECT_NE(request_digest("p", a), request_digest("p", b));
  EXPECT_NE(request_digest("p", a), request_digest("q", a));
  EXPECT_EQ(request_digest("p", a), request_digest("p", a));
}

TEST(JudgeDigit, StrictAndLenient) {
  EXPECT_EQ(parse_judge_digit(" 4\n"), 4);
  EXPECT_THROW(parse_judge_digit("Score: 4"), Error);
  EXPECT_THROW(parse_judge_digit("6"), Error);
  EXPECT_THROW(parse_judge_digit("0"), Error);
  EXPECT_EQ(parse_judge_digit("Score: 4", true), 4);
  EXPECT_THROW(parse_judge_digit("4.5", true), Error);
  EXPECT_THROW(parse_judge_digit("12", true), Error);
}

TEST(Embeddings, NormalizedAndCosine) {
  StubProvider p(json{{"id", "e"}, {"capabilities", {"embed"}}, {"embed", {{"mode", "hash"}, {"dims", 32}}}});
  const auto v = embed(p, {"the same words", "the same words", "entirely different text"});
  ASSERT_EQ(v.size(), 3u);
  EXPECT_NEAR(v[0].norm(), 1.0, 1e-12);
  EXPECT_NEAR(cosine(v[0], v[1]), 1.0, 1e-12);
  EXPECT_LT(cosine(v[0], v[2]), 1.0);
}

TEST(Ledger, SinkWritesOneCanonicalLinePerCall) {
  testutil::TempDir dir("ledger");
  StubProvider p(json{{"id", "s"}});
  CallLedger ledger(dir.path() / "calls.jsonl");
  generate(p, "", "a", {}, &ledger);
  generate(p, "", "b", {}, &ledger);
  const auto lines = text::split_lines(io::read_file(dir.path() / "calls.jsonl"));
  ASSERT_GE(lines.size(), 2u);
  EXPECT_EQ(CallRecord::from_json(json::parse(lines[1])).response_text, "ok");
}

TEST(Credentials, EnvName) { EXPECT_EQ(credential_env_name("open-ai"), "REPACC_OPEN_AI_KEY"); }

class HttpFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      last_body_ = req.body;
      last_auth_ = req.get_header_value("Authorization");
      if (hits_++ == 0) {
        res.status = 429;
        return;
      }
      if (json::parse(req.body)["messages"].back()["content"] == "bad") {
        res.status = 400;
        res.set_content("nope", "text/plain");
        return;
      }
      res.set_content(json{{"choices", {{{"message", {{"content", "3"}}}}}}}.dump(), "application/json");
    });
    server_.Post("/v1/messages", [](const httplib::Request& req, httplib::Response& res) {
      const auto body = json::parse(req.body);
      const std::string key = req.get_header_value("x-api-key");
      res.set_content(json{{"content", {{{"type", "text"}, {"text", key + ":" + body["system"].get<std::string>()}}}}}.dump(),
                      "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    setenv("REPACC_LOCALTEST_KEY", "secret", 1);
  }
  void TearDown() override {
    server_.stop();
    thread_.join();
    unsetenv("REPACC_LOCALTEST_KEY");
  }
  HttpChatProvider make(const std::string& flavor, const std::string& credential = "localtest") {
    return HttpChatProvider(HttpProviderConfig::from_json({{"id", "local"},
                                                           {"flavor", flavor},
                                                           {"base_url", "http://127.0.0.1:" + std::to_string(port_)},
                                                           {"model", "m"},
                                                           {"credential", credential},
                                                           {"timeout_s", 5}}));
  }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> hits_{0};
  std::string last_body_, last_auth_;
};

TEST_F(HttpFixture, OpenAiFlavorRetries429AndSendsStudyParams) {
  auto p = make("openai");
  p.set_params(kStudyParams);
  const auto g = generate(p, "system text", "question", fast_policy(3));
  EXPECT_EQ(g.text, "3");
  EXPECT_EQ(g.record.outcome, CallOutcome::RateLimitedRecovered);
  EXPECT_EQ(last_auth_, "Bearer secret");
  const auto body = json::parse(last_body_);
  EXPECT_EQ(body["temperature"], 0.0);
  EXPECT_EQ(body["max_tokens"], 1024);
  EXPECT_EQ(body["messages"][0]["role"], "system");
}

TEST_F(HttpFixture, ClientErrorsAreNotRetried) {
  auto p = make("openai");
  hits_ = 1;
  const auto g = generate(p, "", "bad", fast_policy(3));
  EXPECT_FALSE(g.record.ok());
  EXPECT_EQ(g.record.attempts, 1);
}

TEST_F(HttpFixture, AnthropicFlavorUsesHeaderKeyAndSystemField) {
  auto p = make("anthropic");
  EXPECT_EQ(generate(p, "sys", "q").text, "secret:sys");
}

TEST_F(HttpFixture, MissingCredentialRaisesAuthMissing) {
  auto p = make("openai", "absent");
  try {
    generate(p, "", "q");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::AuthMissing);
  }
}
