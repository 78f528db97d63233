#include "repacc/providers.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <thread>

#include "repacc/digest.hpp"
#include "repacc/error.hpp"
#include "repacc/text.hpp"

namespace repacc {

using nlohmann::json;

std::string capability_name(Capability c) {
  switch (c) {
    case Capability::Generate: return "generate";
    case Capability::Judge: return "judge";
    case Capability::Embed: return "embed";
  }
  return "?";
}

Capability capability_from_name(const std::string& s) {
  if (s == "generate") return Capability::Generate;
  if (s == "judge") return Capability::Judge;
  if (s == "embed") return Capability::Embed;
  fail(Errc::InvalidArgument, "unknown capability " + s);
}

double EmbeddingVector::norm() const {
  double s = 0;
  for (double v : values) s += v * v;
  return std::sqrt(s);
}

EmbeddingVector EmbeddingVector::unit() const {
  EmbeddingVector out{values, true};
  double n = norm();
  if (n > 0)
    for (auto& v : out.values) v /= n;
  return out;
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dims() != b.dims()) fail(Errc::LengthMismatch, "embedding dimensions differ");
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.dims(); ++i) {
    dot += a.values[i] * b.values[i];
    na += a.values[i] * a.values[i];
    nb += b.values[i] * b.values[i];
  }
  if (na == 0 || nb == 0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

ModelProvider::ModelProvider(std::string id, std::set<Capability> caps, int permits)
    : id_(std::move(id)),
      caps_(std::move(caps)),
      permits_(std::make_unique<std::counting_semaphore<256>>(std::clamp(permits, 1, 256))) {}

ModelProvider::~ModelProvider() = default;

std::vector<EmbeddingVector> ModelProvider::embed_texts(const std::vector<std::string>&) {
  fail(Errc::InvalidArgument, "provider " + id_ + " does not embed");
}

std::string outcome_name(CallOutcome o) {
  switch (o) {
    case CallOutcome::Ok: return "ok";
    case CallOutcome::RateLimitedRecovered: return "rate_limited_recovered";
    case CallOutcome::Failed: return "failed";
  }
  return "?";
}

CallOutcome outcome_from_name(const std::string& s) {
  if (s == "ok") return CallOutcome::Ok;
  if (s == "rate_limited_recovered") return CallOutcome::RateLimitedRecovered;
  if (s == "failed") return CallOutcome::Failed;
  fail(Errc::Parse, "unknown call outcome " + s);
}

json CallRecord::to_json() const {
  return {{"provider_id", provider_id}, {"request_digest", request_digest}, {"response_text", response_text},
          {"latency_ms", latency_ms},   {"attempts", attempts},             {"outcome", outcome_name(outcome)},
          {"error", error}};
}

CallRecord CallRecord::from_json(const json& j) {
  CallRecord r;
  r.provider_id = j.at("provider_id");
  r.request_digest = j.at("request_digest");
  r.response_text = j.at("response_text");
  r.latency_ms = j.at("latency_ms");
  r.attempts = j.at("attempts");
  r.outcome = outcome_from_name(j.at("outcome"));
  r.error = j.value("error", "");
  return r;
}

CallLedger::CallLedger(std::filesystem::path sink) : sink_(std::move(sink)) {}

void CallLedger::append(const CallRecord& r) {
  std::lock_guard lock(mu_);
  records_.push_back(r);
  if (sink_) io::append_line(*sink_, canonical_json(r.to_json()));
}

std::vector<CallRecord> CallLedger::records() const {
  std::lock_guard lock(mu_);
  return records_;
}

std::size_t CallLedger::size() const {
  std::lock_guard lock(mu_);
  return records_.size();
}

std::chrono::milliseconds RetryPolicy::delay(int failed_attempts, const std::string& request_digest) const {
  double d = static_cast<double>(base.count()) * std::pow(factor, failed_attempts - 1);
  auto h = sha256_hex(request_digest + "#" + std::to_string(failed_attempts));
  double u = static_cast<double>(std::stoull(h.substr(0, 12), nullptr, 16)) / static_cast<double>(1ULL << 48);
  d *= 1.0 + jitter * (2.0 * u - 1.0);
  return std::chrono::milliseconds(static_cast<std::int64_t>(std::llround(d)));
}

std::string request_digest(const std::string& provider_id, const CompletionRequest& req) {
  return sha256_hex(canonical_json({{"provider", provider_id},
                                    {"system", req.system},
                                    {"user", req.user},
                                    {"temperature", req.params.temperature},
                                    {"max_output_tokens", req.params.max_output_tokens}}));
}

Generation generate(ModelProvider& provider, const std::string& system_prompt, const std::string& user_prompt,
                    const RetryPolicy& policy, CallLedger* ledger, Capability needed) {
  if (!provider.has(needed))
    fail(Errc::InvalidArgument, "provider " + provider.id() + " lacks capability " + capability_name(needed));
  provider.check_credentials();

  CompletionRequest req{system_prompt, user_prompt, provider.params()};
  Generation g;
  g.record.provider_id = provider.id();
  g.record.request_digest = request_digest(provider.id(), req);

  const auto start = std::chrono::steady_clock::now();
  const int cap = std::max(1, policy.max_attempts);
  bool done = false;
  for (int attempt = 1; attempt <= cap && !done; ++attempt) {
    g.record.attempts = attempt;
    provider.acquire();
    try {
      g.text = provider.complete(req);
      provider.release();
      g.record.outcome = attempt > 1 ? CallOutcome::RateLimitedRecovered : CallOutcome::Ok;
      g.record.error.clear();
      done = true;
    } catch (const TransientProviderError& e) {
      provider.release();
      g.record.error = "transient(" + std::to_string(e.status()) + "): " + e.what();
      if (attempt < cap && !provider.deterministic()) {
        auto wait = policy.delay(attempt, g.record.request_digest);
        if (policy.sleeper)
          policy.sleeper(wait);
        else
          std::this_thread::sleep_for(wait);
      }
    } catch (const Error& e) {
      provider.release();
      if (e.code() == Errc::AuthMissing) throw;
      g.record.error = e.what();
      break;
    } catch (const std::exception& e) {
      provider.release();
      g.record.error = e.what();
      break;
    }
  }
  if (!done) {
    g.text.clear();
    g.record.outcome = CallOutcome::Failed;
  }
  g.record.response_text = g.text;
  if (!provider.deterministic())
    g.record.latency_ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
  if (ledger) ledger->append(g.record);
  return g;
}

std::string generate_or_throw(ModelProvider& provider, const std::string& system_prompt,
                              const std::string& user_prompt, const RetryPolicy& policy, CallLedger* ledger,
                              Capability needed) {
  auto g = generate(provider, system_prompt, user_prompt, policy, ledger, needed);
  if (!g.record.ok())
    fail(Errc::ProviderFailure, provider.id() + " failed after " + std::to_string(g.record.attempts) +
                                    " attempt(s): " + g.record.error);
  return g.text;
}

std::vector<EmbeddingVector> embed(ModelProvider& provider, const std::vector<std::string>& texts, bool normalized) {
  if (!provider.has(Capability::Embed)) fail(Errc::InvalidArgument, "provider " + provider.id() + " cannot embed");
  provider.check_credentials();
  provider.acquire();
  std::vector<EmbeddingVector> out;
  try {
    out = provider.embed_texts(texts);
  } catch (const TransientProviderError& e) {
    provider.release();
    fail(Errc::ProviderFailure, std::string("embedding failed: ") + e.what());
  } catch (...) {
    provider.release();
    throw;
  }
  provider.release();
  if (out.size() != texts.size()) fail(Errc::ProviderFailure, "embedding count does not match input count");
  if (normalized)
    for (auto& v : out) v = v.unit();
  return out;
}

int parse_judge_digit(const std::string& raw, bool lenient) {
  auto t = text::trim(raw);
  if (t.size() == 1 && t[0] >= '1' && t[0] <= '5') return t[0] - '0';
  if (lenient) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t[i] < '1' || t[i] > '5') continue;
      bool left = i > 0 && (std::isdigit(static_cast<unsigned char>(t[i - 1])) || t[i - 1] == '.');
      bool right = i + 1 < t.size() && (std::isdigit(static_cast<unsigned char>(t[i + 1])) || t[i + 1] == '.');
      if (!left && !right) return t[i] - '0';
    }
  }
  fail(Errc::InvalidJudgeOutput, "judge output is not a single digit 1-5: \"" + text::utf8_prefix(raw, 40) + "\"");
}

std::string credential_env_name(const std::string& provider_name) {
  std::string out = "REPACC_";
  for (unsigned char c : provider_name) out.push_back(std::isalnum(c) ? static_cast<char>(std::toupper(c)) : '_');
  return out + "_KEY";
}

}  // namespace repacc
