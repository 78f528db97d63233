#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "repacc/providers.hpp"

namespace repacc {

// Deterministic offline provider driven by a JSON table.
//
// Table keys (all optional except id):
//   id, capabilities, permits
//   rules: [{contains: str | [str], response | responses | fail: "transient"|"fatal"}]
//   fail_first: N           first N calls raise a transient 429
//   fail_always: bool       every call raises a transient 503
//   judge: {bias, gain}     offline judge scoring
//   embed: {mode: "hash"|"text"|"basis", dims, basis: {token: [..]}}
//   offline: bool           built-in behaviours when no rule matches (default true)
class StubProvider : public ModelProvider {
 public:
  explicit StubProvider(const nlohmann::json& table);
  static StubProvider from_file(const std::filesystem::path& p);

  std::string complete(const CompletionRequest& req) override;
  std::vector<EmbeddingVector> embed_texts(const std::vector<std::string>& texts) override;
  bool deterministic() const override { return true; }

  std::size_t calls() const { return calls_.load(); }
  const nlohmann::json& table() const { return table_; }

 private:
  struct Rule {
    std::vector<std::string> contains;
    std::vector<std::string> responses;
    std::string fail;
    std::size_t next = 0;
  };

  std::string offline(const CompletionRequest& req) const;
  std::string offline_judge(const std::string& prompt) const;
  std::string offline_response(const std::string& system, const std::string& user) const;
  std::string offline_extract(const std::string& prompt) const;
  std::string offline_layer(const std::string& prompt) const;
  std::string offline_compose(const std::string& prompt) const;
  std::string offline_battery(const std::string& prompt) const;

  nlohmann::json table_;
  std::vector<Rule> rules_;
  std::mutex mu_;
  std::atomic<std::size_t> calls_{0};
  std::size_t fail_first_ = 0;
  bool fail_always_ = false;
  bool offline_enabled_ = true;
  double judge_bias_ = 0.0;
  double judge_gain_ = 1.0;
  std::string embed_mode_ = "hash";
  std::size_t embed_dims_ = 256;
  std::map<std::string, std::vector<double>> basis_;
};

// Refusal sentence the offline responder emits for an empty context.
inline constexpr std::string_view kStubRefusal = "I don't have specific information about how ";

}  // namespace repacc
