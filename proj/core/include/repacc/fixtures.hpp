#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "repacc/stats/aggregate.hpp"

namespace repacc {

struct PaperTableRow {
  std::string subject_id;
  std::string label;
  double c5 = 0.0;
  double c4 = 0.0;
  double c2a = 0.0;
  double c4a = 0.0;
  double published_delta_spec = 0.0;
  double published_delta_c4a = 0.0;
  std::string anchor_crossed;
  std::optional<int> literal_count;
  bool control = false;
};

struct PaperTable {
  std::string version;
  std::size_t questions_per_subject = 39;
  double low_baseline_max = 2.0;
  std::vector<PaperTableRow> rows;

  // Non-control rows in table order.
  std::vector<PaperTableRow> analysis_rows() const;
  std::vector<PaperTableRow> low_baseline_rows() const;
  // One SubjectConditionMean per (row, C5 / C4 / C2a / C4a).
  std::vector<stats::SubjectConditionMean> means(bool include_control = false) const;
  std::string digest() const;
};

PaperTable load_paper_table(const std::filesystem::path& p);
PaperTable load_default_paper_table();

struct HeadlineOptions {
  std::size_t iterations = 10000;
  std::uint64_t bootstrap_seed = 20260411;
  std::uint64_t permutation_seed = 20260412;
  std::size_t threads = 1;
};

// Gradient, paired tests, resampling and the battery-composition regression
// over the analysis rows. Keys are stable; reports reference them.
nlohmann::json analyze_paper_table(const PaperTable& table, const HeadlineOptions& opts = {});

}  // namespace repacc
