#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "repacc/factstore.hpp"
#include "repacc/prompts.hpp"
#include "repacc/providers.hpp"

namespace repacc {

enum class LayerKind { Anchors, Core, Predictions };
std::string layer_name(LayerKind k);

struct SpecLayer {
  LayerKind kind = LayerKind::Core;
  std::string text;
  std::vector<std::string> item_ids;
};

struct AuthoredLayers {
  std::vector<SpecLayer> layers;
  std::map<std::string, std::vector<std::string>> provenance;
  std::vector<std::string> warnings;

  const SpecLayer* find(LayerKind k) const;
  const SpecLayer& get(LayerKind k) const;
};

struct AuthorOptions {
  std::string subject_name;
  bool parallel = false;
  std::optional<PromptPack> pack;
};

// Headings of the form "## A1: ..." / "## P3 ..." in document order.
std::vector<std::string> parse_item_ids(const std::string& text, char prefix);

// Splits a fenced ```provenance block out of a layer; returns the map and
// leaves the stripped text in `text`.
std::optional<std::map<std::string, std::vector<std::string>>> take_provenance(std::string& text);

AuthoredLayers author_layers(const std::vector<Fact>& facts, ModelProvider& provider, const AuthorOptions& opts = {},
                             const RetryPolicy& policy = {}, CallLedger* ledger = nullptr);

// Identity-tier facts ordered by fact id, first `limit`.
std::vector<Fact> identity_fact_sample(const std::vector<Fact>& facts, std::size_t limit = 20);

std::string compose_brief(const AuthoredLayers& layers, const std::vector<Fact>& identity_sample,
                          ModelProvider& provider, const AuthorOptions& opts = {}, const RetryPolicy& policy = {},
                          CallLedger* ledger = nullptr);

struct SubjectNames {
  std::string name;
  std::vector<std::string> aliases;
};

inline constexpr std::string_view kNeutralReferent = "the subject";

std::string anonymize(const std::string& text, const SubjectNames& names);
std::size_t estimate_tokens(const std::string& text);

struct SpecDocument {
  std::string subject_id;
  std::vector<SpecLayer> layers;
  std::string brief;
  std::size_t token_estimate = 0;
  std::size_t char_count = 0;
  bool anonymized = false;
  std::map<std::string, std::vector<std::string>> provenance;
  std::vector<std::string> identity_sample;

  std::string served() const;
  nlohmann::json manifest() const;
  void save(const std::filesystem::path& dir) const;
  static SpecDocument load(const std::filesystem::path& dir);
};

SpecDocument assemble_spec(const std::string& subject_id, const AuthoredLayers& layers, const std::string& brief,
                           bool anonymize_names, const SubjectNames& names = {});

enum class DerangementScheme { V1Fixed, V2Random };

struct DerangementMap {
  DerangementScheme scheme = DerangementScheme::V2Random;
  std::optional<std::uint64_t> seed;
  std::map<std::string, std::string> pairs;

  nlohmann::json to_json() const;
};

DerangementMap derange(const std::vector<std::string>& subjects, DerangementScheme scheme,
                       std::optional<std::uint64_t> seed = std::nullopt,
                       const std::map<std::string, std::string>* fixed_table = nullptr);

std::map<std::string, std::string> load_fixed_table(const std::filesystem::path& p);

}  // namespace repacc
