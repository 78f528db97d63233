#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "repacc/battery.hpp"
#include "repacc/judging.hpp"

namespace repacc::stats {

struct SubjectConditionMean {
  std::string subject_id;
  std::string condition;
  std::map<std::string, double> per_judge_means;
  double panel_mean = 0.0;
  std::size_t n_questions = 0;
  std::size_t effective_panel = 0;

  nlohmann::json to_json() const;
};

struct AggregateOptions {
  std::vector<std::string> judges;  // empty = cube's primary panel
  std::optional<Tier> tier = Tier::BehavioralPrediction;  // nullopt = every tier
};

// Per-judge question means first, then the mean over judges with at least one
// valid score. Throws EmptyCell for an empty cube or a cell with no scores.
std::vector<SubjectConditionMean> aggregate(const ScoreCube& cube, const AggregateOptions& opts = {});

// Per-question mean over the judges present for that question.
std::map<std::string, double> question_panel_means(const ScoreCube& cube, const std::string& subject_id,
                                                   const std::string& condition, const AggregateOptions& opts = {});

// (before, after) per-question panel means for questions scored in both conditions.
std::vector<std::pair<double, double>> paired_question_means(const ScoreCube& cube, const std::string& subject_id,
                                                             const std::string& before, const std::string& after,
                                                             const AggregateOptions& opts = {});

const SubjectConditionMean* find_mean(const std::vector<SubjectConditionMean>& means, const std::string& subject_id,
                                      const std::string& condition);

struct DeltaSeries {
  std::string condition_a;
  std::string condition_b;
  std::vector<std::pair<std::string, double>> pairs;
  std::vector<std::string> omitted;

  std::vector<double> values() const;
  nlohmann::json to_json() const;
};

// delta = mean(condition_a) - mean(condition_b), in order of first appearance.
DeltaSeries delta(const std::vector<SubjectConditionMean>& means, const std::string& condition_a,
                  const std::string& condition_b);

}  // namespace repacc::stats
