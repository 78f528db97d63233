#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace repacc::stats {

// floor(x), with 5.0 in band 5. Throws OutOfRangeScore outside [1, 5].
int band(double x);

struct TransitionTable {
  std::array<std::array<std::size_t, 5>, 5> counts{};  // [from - 1][to - 1]
  std::size_t no_crossing = 0;
  std::size_t upward = 0;
  std::size_t downward = 0;
  std::size_t multi_anchor = 0;  // |band change| >= 2
  std::size_t total = 0;

  std::size_t at(int from, int to) const { return counts[from - 1][to - 1]; }
  nlohmann::json to_json() const;
};

TransitionTable anchor_transitions(const std::vector<std::pair<double, double>>& before_after);

struct ImprovementRates {
  std::size_t improved = 0;
  std::size_t tied = 0;
  std::size_t worse = 0;
  double improvement_rate = 0.0;
  std::optional<double> median_delta_improved;
  std::optional<double> median_delta_worsened;

  nlohmann::json to_json() const;
};

// Strict comparison of raw means, or of means rounded to `round_decimals`.
ImprovementRates improvement_rates(const std::vector<std::pair<double, double>>& before_after,
                                   std::optional<int> round_decimals = std::nullopt);

}  // namespace repacc::stats
