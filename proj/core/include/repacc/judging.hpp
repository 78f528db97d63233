#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "repacc/battery.hpp"
#include "repacc/providers.hpp"
#include "repacc/runner.hpp"

namespace repacc {

inline constexpr std::size_t kJudgeResponseLimit = 1500;

// Optional judge-side subject context: name and source title only.
struct JudgeSubjectContext {
  std::string name;
  std::string source_title;
};

std::string build_judge_prompt(const std::string& heldout_span, const std::string& response_text,
                               const JudgeSubjectContext* context = nullptr);

struct Judgment {
  std::string subject_id;
  std::string qid;
  std::string condition;
  std::string judge_id;
  std::optional<int> score;  // nullopt = invalid / absent
  std::string raw;
  int calls = 0;
  CallRecord call;

  bool valid() const { return score.has_value(); }
  nlohmann::json to_json() const;
  static Judgment from_json(const nlohmann::json& j);
};

struct PanelDef {
  std::vector<std::string> primary;
  std::vector<std::string> sensitivity;

  nlohmann::json to_json() const;
  static PanelDef from_json(const nlohmann::json& j);
};

struct CubeKey {
  std::string subject_id;
  std::string condition;
  std::string qid;

  auto operator<=>(const CubeKey&) const = default;
};

// (subject, condition, qid, judge) -> score. An attempted judgment that
// produced no valid score is stored as nullopt and never counted as a value.
class ScoreCube {
 public:
  PanelDef panel;

  void set(const CubeKey& k, const std::string& judge_id, std::optional<int> score);
  std::optional<int> get(const CubeKey& k, const std::string& judge_id) const;
  bool attempted(const CubeKey& k, const std::string& judge_id) const;
  void set_tier(const std::string& subject_id, const std::string& qid, Tier t);
  Tier tier(const std::string& subject_id, const std::string& qid) const;

  const std::map<CubeKey, std::map<std::string, std::optional<int>>>& cells() const { return cells_; }
  std::size_t effective_panel(const CubeKey& k, const std::vector<std::string>& judges) const;
  std::size_t effective_panel(const CubeKey& k) const { return effective_panel(k, panel.primary); }
  std::vector<CubeKey> absences(const std::vector<std::string>& judges) const;
  std::set<std::string> subjects() const;
  std::set<std::string> conditions() const;
  bool empty() const { return cells_.empty(); }
  std::size_t size() const;
  void merge(const ScoreCube& other);

  nlohmann::json to_json() const;
  static ScoreCube from_json(const nlohmann::json& j);

 private:
  std::map<CubeKey, std::map<std::string, std::optional<int>>> cells_;
  std::map<std::pair<std::string, std::string>, Tier> tiers_;
};

struct JudgeItem {
  std::string subject_id;
  std::string qid;
  std::string condition;
  Tier tier = Tier::BehavioralPrediction;
  std::string heldout_span;
  std::string response_text;
};

// Pairs each response with the held-out span of its question.
std::vector<JudgeItem> judge_items(const Battery& battery, const std::vector<ResponseRecord>& records);

struct PanelOptions {
  RetryPolicy policy;
  bool lenient_parse = false;
  std::size_t workers = 1;
  std::map<std::string, JudgeSubjectContext> subject_context;  // empty = no context
};

struct PanelResult {
  ScoreCube cube;
  std::vector<Judgment> judgments;
};

// Attempts every (item, judge) pair. Invalid outputs are retried once, then
// recorded as absent.
PanelResult run_panel(const std::vector<JudgeItem>& items, const std::vector<ModelProvider*>& judges,
                      const PanelDef& panel, const PanelOptions& opts = {}, CallLedger* ledger = nullptr);

// judgments/<subject>/<condition>.json: {battery_checksum, by_judge: {judge: [..]}}
std::filesystem::path judgment_path(const std::filesystem::path& run_dir, const std::string& subject_id,
                                    const std::string& condition);
void save_judgments(const std::filesystem::path& path, const std::string& battery_checksum,
                    const std::vector<Judgment>& judgments);
std::vector<Judgment> load_judgments(const std::filesystem::path& path, const std::string& expected_checksum);

// Calibration

struct CalibrationFixture {
  std::string id;
  std::string ground_truth;
  std::string paraphrase;
  std::string first_sentence;
  std::string padded;
};

std::vector<CalibrationFixture> load_calibration_fixtures(const std::filesystem::path& p);
std::vector<CalibrationFixture> load_default_calibration_fixtures();

struct CalibrationThresholds {
  double verbatim_min = 4.9;
  double paraphrase_min = 4.5;
  double short_max = 4.6;
  double long_min = 4.5;

  static CalibrationThresholds from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

enum class CalibrationKind { Verbatim, Paraphrased, ShortCorrect, LongCorrect };
std::string calibration_kind_name(CalibrationKind k);
const std::string& calibration_response(const CalibrationFixture& f, CalibrationKind k);

struct CalibrationTest {
  CalibrationKind kind;
  std::vector<int> scores;
  std::size_t invalid = 0;
  double mean = 0.0;
  bool pass = false;
};

struct CalibrationReport {
  std::string judge_id;
  std::size_t repetitions = 0;
  CalibrationThresholds thresholds;
  CalibrationTest verbatim{CalibrationKind::Verbatim, {}, 0, 0.0, false};
  CalibrationTest paraphrased{CalibrationKind::Paraphrased, {}, 0, 0.0, false};
  CalibrationTest short_correct{CalibrationKind::ShortCorrect, {}, 0, 0.0, false};
  CalibrationTest long_correct{CalibrationKind::LongCorrect, {}, 0, 0.0, false};

  bool all_pass() const { return verbatim.pass && paraphrased.pass && short_correct.pass && long_correct.pass; }
  nlohmann::json to_json() const;
};

// Repetition r of each test uses fixture r % fixtures.size(). Throws
// ProviderFailure when a call fails or a test yields no valid score.
CalibrationReport calibration_diagnostic(ModelProvider& judge, const std::vector<CalibrationFixture>& fixtures,
                                         std::size_t repetitions = 20, const CalibrationThresholds& thresholds = {},
                                         const RetryPolicy& policy = {});

// Integer score sequence of length n whose mean is round(mean * n) / n.
std::vector<int> scripted_scores(double mean, std::size_t n);

// Stub table for a judge that returns scripted scores reproducing the given
// per-test means under calibration_diagnostic.
nlohmann::json scripted_judge_table(const std::string& judge_id, const std::vector<CalibrationFixture>& fixtures,
                                    std::size_t repetitions, double verbatim, double paraphrased,
                                    double short_correct, double long_correct);

}  // namespace repacc
