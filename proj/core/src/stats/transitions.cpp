#include "repacc/stats/transitions.hpp"

#include <cmath>
#include <cstdio>

#include "repacc/error.hpp"
#include "repacc/stats/descriptive.hpp"

namespace repacc::stats {

int band(double x) {
  if (!(x >= 1.0 && x <= 5.0)) fail(Errc::OutOfRangeScore, "score " + std::to_string(x) + " outside [1, 5]");
  return std::min(5, static_cast<int>(std::floor(x)));
}

nlohmann::json TransitionTable::to_json() const {
  nlohmann::json c = nlohmann::json::object();
  for (int f = 1; f <= 5; ++f)
    for (int t = 1; t <= 5; ++t)
      if (at(f, t)) c[std::to_string(f) + "->" + std::to_string(t)] = at(f, t);
  return {{"counts", c},        {"no_crossing", no_crossing}, {"upward", upward},
          {"downward", downward}, {"multi_anchor", multi_anchor}, {"total", total}};
}

TransitionTable anchor_transitions(const std::vector<std::pair<double, double>>& before_after) {
  TransitionTable t;
  for (const auto& [b, a] : before_after) {
    const int from = band(b), to = band(a);
    ++t.counts[from - 1][to - 1];
    ++t.total;
    if (to > from)
      ++t.upward;
    else if (to < from)
      ++t.downward;
    else
      ++t.no_crossing;
    if (std::abs(to - from) >= 2) ++t.multi_anchor;
  }
  return t;
}

nlohmann::json ImprovementRates::to_json() const {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  return {{"improved", improved},
          {"tied", tied},
          {"worse", worse},
          {"improvement_rate", improvement_rate},
          {"median_delta_improved", opt(median_delta_improved)},
          {"median_delta_worsened", opt(median_delta_worsened)}};
}

ImprovementRates improvement_rates(const std::vector<std::pair<double, double>>& before_after,
                                   std::optional<int> round_decimals) {
  if (before_after.empty()) fail(Errc::InvalidArgument, "improvement rates need at least one pair");
  const double scale = round_decimals ? std::pow(10.0, *round_decimals) : 1.0;
  auto r = [&](double v) { return round_decimals ? std::round(v * scale) / scale : v; };
  ImprovementRates out;
  std::vector<double> up, down;
  for (const auto& [b0, a0] : before_after) {
    const double b = r(b0), a = r(a0);
    if (a > b) {
      ++out.improved;
      up.push_back(a - b);
    } else if (a < b) {
      ++out.worse;
      down.push_back(a - b);
    } else {
      ++out.tied;
    }
  }
  out.improvement_rate = static_cast<double>(out.improved) / static_cast<double>(before_after.size());
  if (!up.empty()) out.median_delta_improved = median(up);
  if (!down.empty()) out.median_delta_worsened = median(down);
  return out;
}

}  // namespace repacc::stats
