#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "repacc/judging.hpp"
#include "repacc/providers.hpp"

namespace repacc {

struct SubjectEntry {
  std::string id;
  std::string name;
  std::vector<std::string> aliases;
  std::string title;
  std::string source_ref;
  std::filesystem::path corpus;  // resolved against the manifest directory
  double split_ratio = 0.5;
  bool single_chapter_fallback = false;
  std::map<std::string, std::filesystem::path> retrieval;  // system -> recorded log
};

struct SubjectManifest {
  std::vector<SubjectEntry> subjects;

  const SubjectEntry& find(const std::string& id) const;
  std::vector<std::string> ids() const;
  static SubjectManifest load(const std::filesystem::path& p);
};

// A provider spec is a path to a JSON file or an inline object. Objects with
// an "http" key build an HTTP client; anything else is a stub table.
std::unique_ptr<ModelProvider> make_provider(const nlohmann::json& spec, const std::filesystem::path& base);

struct BatterySettings {
  std::size_t batches = 4;
  std::size_t per_batch = 10;
  std::size_t window_chars = 5000;
  std::size_t leak_n = 7;
  bool override_leaks = false;
};

struct RunConfig {
  std::string run_id;
  std::string subjects;  // manifest path, relative to the config file
  nlohmann::json providers = nlohmann::json::object();  // generator, responder, embedder, judges[]
  PanelDef panel;
  std::vector<std::string> conditions;
  std::uint64_t seed_derangement = 0;
  std::uint64_t seed_bootstrap = 0;
  std::uint64_t seed_permutation = 0;
  BatterySettings battery;
  std::size_t context_budget = 200000;
  int max_attempts = 5;
  std::int64_t backoff_ms = 1000;
  std::size_t workers = 1;
  std::size_t calibration_repetitions = 20;
  CalibrationThresholds calibration;
  nlohmann::json tolerances = nlohmann::json::object();

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::filesystem::path& p);
  std::string digest() const;
  RetryPolicy retry_policy() const;
};

class Workspace {
 public:
  explicit Workspace(std::filesystem::path root) : root_(std::move(root)) {}

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path subject_dir(const std::string& id) const { return root_ / "subjects" / id; }
  std::filesystem::path runs_root() const { return root_ / "runs"; }
  std::filesystem::path run_dir(const std::string& run_id) const { return runs_root() / run_id; }

  // Writes config.lock.json on first use; afterwards the config must match it.
  void lock_config(const RunConfig& cfg) const;

 private:
  std::filesystem::path root_;
};

}  // namespace repacc
