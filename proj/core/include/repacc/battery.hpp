#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "repacc/corpus.hpp"
#include "repacc/digest.hpp"
#include "repacc/prompts.hpp"
#include "repacc/providers.hpp"

namespace repacc {

inline const std::vector<std::string> kCategories = {"decisions", "values",     "relationships", "conflict", "learning",
                                                     "risk",      "creativity", "stress",        "career",   "change_over_time"};

enum class Tier { BehavioralPrediction, Recall, AdversarialAbstention };
std::string tier_name(Tier t);
Tier tier_from_name(const std::string& s);

struct WindowRef {
  std::string chapter_id;
  std::size_t begin = 0;  // byte offsets into the chapter text
  std::size_t end = 0;
};

struct Question {
  std::string qid;
  std::string subject_id;
  Tier tier = Tier::BehavioralPrediction;
  std::string category;
  std::string stem;
  std::string heldout_span;
  WindowRef window_ref;

  nlohmann::json to_json() const;
  static Question from_json(const nlohmann::json& j);
};

struct FreezeOptions;

class Battery {
 public:
  Battery() = default;
  Battery(std::string subject_id, std::string generator_provider_id);

  const std::string& subject_id() const { return subject_id_; }
  const std::string& generator_provider_id() const { return generator_; }
  const std::vector<Question>& questions() const { return questions_; }
  std::vector<Question> behavioral() const;
  const Question& question(const std::string& qid) const;
  bool frozen() const { return frozen_; }
  const std::string& checksum() const { return checksum_; }
  DigestAlgo checksum_algo() const { return algo_; }
  const nlohmann::json& leak_violations() const { return leak_violations_; }

  // Mutators raise AlreadyFrozen once frozen.
  void add(Question q);
  void set_questions(std::vector<Question> qs);

  std::map<std::string, std::size_t> category_counts() const;
  nlohmann::json content_json() const;
  std::string compute_checksum(DigestAlgo algo) const;
  nlohmann::json to_json() const;
  static Battery from_json(const nlohmann::json& j);

 private:
  friend Battery freeze(const Battery&, const std::vector<Chapter>&, const FreezeOptions&);
  void require_mutable() const;

  std::string subject_id_;
  std::string generator_;
  std::vector<Question> questions_;
  bool frozen_ = false;
  std::string checksum_;
  DigestAlgo algo_ = DigestAlgo::Md5;
  nlohmann::json leak_violations_ = nlohmann::json::array();
};

struct BatteryConfig {
  std::string subject_id;
  std::size_t batches = 4;
  std::size_t per_batch = 10;
  std::size_t window_chars = 5000;
  std::string subject_name;
  std::optional<PromptPack> pack;
};

struct TextWindow {
  std::size_t batch = 0;
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t quota = 0;
};

// Non-overlapping tiling per batch pass; batch b is shifted by
// b/batches of the slack left after tiling.
std::vector<TextWindow> plan_windows(std::size_t text_chars, const BatteryConfig& cfg);

struct GenerationLog {
  std::vector<TextWindow> windows;
  std::vector<std::string> dropped;
};

Battery generate_battery(const std::vector<Chapter>& heldout, ModelProvider& provider, const BatteryConfig& cfg = {},
                         GenerationLog* log = nullptr, const RetryPolicy& policy = {}, CallLedger* ledger = nullptr);

struct CategoryTargets {
  std::map<std::string, std::size_t> caps;
  std::optional<std::size_t> total;

  static CategoryTargets load(const std::filesystem::path& p);
  static CategoryTargets load_default();
};

Battery dedup_and_cap(const Battery& raw, const CategoryTargets& targets);

LeakReport leakage_audit(const Battery& battery, const std::vector<Chapter>& heldout, std::size_t n = 7);

struct FreezeOptions {
  DigestAlgo algo = DigestAlgo::Md5;
  bool override_leaks = false;
  std::size_t n_gram = 7;
};

Battery freeze(const Battery& battery, const std::vector<Chapter>& heldout, const FreezeOptions& opts = {});

// Verifies the checksum, and span containment when held-out chapters are given.
Battery load_battery(const std::filesystem::path& p, const std::vector<Chapter>* heldout = nullptr);
void verify_spans(const Battery& battery, const std::vector<Chapter>& heldout);

}  // namespace repacc
