#include "repacc/http_provider.hpp"

#include <cstdlib>

#include <httplib.h>

#include "repacc/error.hpp"

namespace repacc {

using nlohmann::json;

HttpProviderConfig HttpProviderConfig::from_json(const json& j) {
  HttpProviderConfig c;
  c.id = j.at("id");
  c.flavor = j.value("flavor", "openai");
  c.base_url = j.at("base_url");
  c.model = j.at("model");
  c.credential_name = j.value("credential", c.flavor);
  c.timeout_s = j.value("timeout_s", 120);
  c.permits = j.value("permits", 4);
  c.can_embed = j.value("embed", false);
  c.embed_model = j.value("embed_model", "");
  if (c.flavor != "anthropic" && c.flavor != "openai")
    fail(Errc::InvalidArgument, "unsupported provider flavor " + c.flavor);
  return c;
}

HttpChatProvider::HttpChatProvider(HttpProviderConfig cfg)
    : ModelProvider(cfg.id,
                    cfg.can_embed ? std::set<Capability>{Capability::Generate, Capability::Judge, Capability::Embed}
                                  : std::set<Capability>{Capability::Generate, Capability::Judge},
                    cfg.permits),
      cfg_(std::move(cfg)) {}

void HttpChatProvider::check_credentials() const { (void)key(); }

std::string HttpChatProvider::key() const {
  auto name = credential_env_name(cfg_.credential_name);
  const char* v = std::getenv(name.c_str());
  if (!v || !*v) fail(Errc::AuthMissing, "environment variable " + name + " is not set");
  return v;
}

json HttpChatProvider::post(const std::string& path, const json& body) const {
  httplib::Client cli(cfg_.base_url);
  cli.set_connection_timeout(cfg_.timeout_s, 0);
  cli.set_read_timeout(cfg_.timeout_s, 0);
  httplib::Headers headers;
  if (cfg_.flavor == "anthropic") {
    headers.emplace("x-api-key", key());
    headers.emplace("anthropic-version", "2023-06-01");
  } else {
    headers.emplace("Authorization", "Bearer " + key());
  }
  auto res = cli.Post(path, headers, body.dump(), "application/json");
  if (!res) throw TransientProviderError(0, id() + ": transport error " + httplib::to_string(res.error()));
  if (res->status == 429 || res->status >= 500)
    throw TransientProviderError(res->status, id() + ": HTTP " + std::to_string(res->status));
  if (res->status != 200)
    fail(Errc::ProviderFailure, id() + ": HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
  try {
    return json::parse(res->body);
  } catch (const json::exception& e) {
    fail(Errc::ProviderFailure, id() + ": unparseable response body");
  }
}

std::string HttpChatProvider::complete(const CompletionRequest& req) {
  if (cfg_.flavor == "anthropic") {
    json body = {{"model", cfg_.model},
                 {"max_tokens", req.params.max_output_tokens},
                 {"temperature", req.params.temperature},
                 {"messages", json::array({{{"role", "user"}, {"content", req.user}}})}};
    if (!req.system.empty()) body["system"] = req.system;
    auto r = post("/v1/messages", body);
    std::string out;
    for (const auto& block : r.value("content", json::array()))
      if (block.value("type", "") == "text") out += block.value("text", "");
    return out;
  }
  json msgs = json::array();
  if (!req.system.empty()) msgs.push_back({{"role", "system"}, {"content", req.system}});
  msgs.push_back({{"role", "user"}, {"content", req.user}});
  json body = {{"model", cfg_.model},
               {"max_tokens", req.params.max_output_tokens},
               {"temperature", req.params.temperature},
               {"messages", msgs}};
  auto r = post("/v1/chat/completions", body);
  try {
    return r.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception&) {
    fail(Errc::ProviderFailure, id() + ": response lacks choices[0].message.content");
  }
}

std::vector<EmbeddingVector> HttpChatProvider::embed_texts(const std::vector<std::string>& texts) {
  if (!cfg_.can_embed || cfg_.flavor != "openai")
    fail(Errc::InvalidArgument, id() + ": embeddings need an openai-flavored endpoint");
  auto r = post("/v1/embeddings", {{"model", cfg_.embed_model.empty() ? cfg_.model : cfg_.embed_model},
                                   {"input", texts}});
  std::vector<EmbeddingVector> out;
  for (const auto& d : r.at("data")) out.push_back({d.at("embedding").get<std::vector<double>>(), false});
  return out;
}

}  // namespace repacc
