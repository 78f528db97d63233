#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "repacc/providers.hpp"

namespace repacc {

struct HttpProviderConfig {
  std::string id;               // e.g. "haiku-4.5"
  std::string flavor;           // "anthropic" or "openai"
  std::string base_url;         // scheme://host[:port]
  std::string model;
  std::string credential_name;  // key read from REPACC_<NAME>_KEY
  int timeout_s = 120;
  int permits = 4;
  bool can_embed = false;
  std::string embed_model;

  static HttpProviderConfig from_json(const nlohmann::json& j);
};

class HttpChatProvider : public ModelProvider {
 public:
  explicit HttpChatProvider(HttpProviderConfig cfg);

  std::string complete(const CompletionRequest& req) override;
  std::vector<EmbeddingVector> embed_texts(const std::vector<std::string>& texts) override;
  void check_credentials() const override;

  const HttpProviderConfig& config() const { return cfg_; }

 private:
  std::string key() const;
  nlohmann::json post(const std::string& path, const nlohmann::json& body) const;

  HttpProviderConfig cfg_;
};

}  // namespace repacc
