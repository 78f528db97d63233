#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace repacc {

enum class Capability { Generate, Judge, Embed };

std::string capability_name(Capability c);
Capability capability_from_name(const std::string& s);

struct ModelParams {
  double temperature = 0.0;
  int max_output_tokens = 1024;

  bool operator==(const ModelParams&) const = default;
};

inline constexpr ModelParams kStudyParams{0.0, 1024};

struct CompletionRequest {
  std::string system;
  std::string user;
  ModelParams params;
};

struct EmbeddingVector {
  std::vector<double> values;
  bool normalized = false;

  std::size_t dims() const { return values.size(); }
  double norm() const;
  EmbeddingVector unit() const;
};

double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

// Retryable failure (HTTP 429, 5xx, timeouts).
class TransientProviderError : public std::runtime_error {
 public:
  TransientProviderError(int status, const std::string& what) : std::runtime_error(what), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

class ModelProvider {
 public:
  ModelProvider(std::string id, std::set<Capability> caps, int permits = 4);
  virtual ~ModelProvider();

  const std::string& id() const { return id_; }
  const std::set<Capability>& capabilities() const { return caps_; }
  bool has(Capability c) const { return caps_.count(c) > 0; }
  const ModelParams& params() const { return params_; }
  void set_params(const ModelParams& p) { params_ = p; }

  // One attempt. Throws TransientProviderError for retryable failures and
  // repacc::Error for everything else.
  virtual std::string complete(const CompletionRequest& req) = 0;
  virtual std::vector<EmbeddingVector> embed_texts(const std::vector<std::string>& texts);

  // Throws AuthMissing when a required credential is absent.
  virtual void check_credentials() const {}
  // Deterministic providers record zero latency and skip backoff sleeps.
  virtual bool deterministic() const { return false; }

  void acquire() { permits_->acquire(); }
  void release() { permits_->release(); }

 private:
  std::string id_;
  std::set<Capability> caps_;
  ModelParams params_;
  std::unique_ptr<std::counting_semaphore<256>> permits_;
};

enum class CallOutcome { Ok, RateLimitedRecovered, Failed };
std::string outcome_name(CallOutcome o);
CallOutcome outcome_from_name(const std::string& s);

struct CallRecord {
  std::string provider_id;
  std::string request_digest;
  std::string response_text;
  std::int64_t latency_ms = 0;
  int attempts = 0;
  CallOutcome outcome = CallOutcome::Ok;
  std::string error;

  bool ok() const { return outcome != CallOutcome::Failed; }
  nlohmann::json to_json() const;
  static CallRecord from_json(const nlohmann::json& j);
};

class CallLedger {
 public:
  CallLedger() = default;
  explicit CallLedger(std::filesystem::path sink);

  void append(const CallRecord& r);
  std::vector<CallRecord> records() const;
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::vector<CallRecord> records_;
  std::optional<std::filesystem::path> sink_;
};

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds base{1000};
  double factor = 2.0;
  double jitter = 0.1;
  std::function<void(std::chrono::milliseconds)> sleeper;

  // Delay before attempt (failed_attempts + 1); jitter is derived from the
  // request digest so that schedules are reproducible.
  std::chrono::milliseconds delay(int failed_attempts, const std::string& request_digest) const;
};

std::string request_digest(const std::string& provider_id, const CompletionRequest& req);

struct Generation {
  std::string text;
  CallRecord record;
};

// Never throws for provider failures; exhausted retries yield a Failed record.
// Throws AuthMissing / InvalidArgument before any call.
Generation generate(ModelProvider& provider, const std::string& system_prompt, const std::string& user_prompt,
                    const RetryPolicy& policy = {}, CallLedger* ledger = nullptr,
                    Capability needed = Capability::Generate);

// As generate(), but throws ProviderFailure when the record failed.
std::string generate_or_throw(ModelProvider& provider, const std::string& system_prompt,
                              const std::string& user_prompt, const RetryPolicy& policy = {},
                              CallLedger* ledger = nullptr, Capability needed = Capability::Generate);

std::vector<EmbeddingVector> embed(ModelProvider& provider, const std::vector<std::string>& texts,
                                   bool normalized = true);

int parse_judge_digit(const std::string& raw, bool lenient = false);

std::string credential_env_name(const std::string& provider_name);

}  // namespace repacc
