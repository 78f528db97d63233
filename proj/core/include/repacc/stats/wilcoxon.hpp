#pragma once

#include <cstddef>
#include <vector>

#include "repacc/stats/aggregate.hpp"
#include "repacc/stats/test_result.hpp"

namespace repacc::stats {

struct WilcoxonOptions {
  std::size_t exact_max_n = 25;
  double zero_tol = 1e-12;  // |d| below this is a zero difference
  double tie_tol = 1e-9;    // |d| values closer than this share a rank
};

// Zeros dropped, ties mid-ranked, W = min(T+, T-). Exact two-sided p for
// n <= exact_max_n, tie-corrected normal approximation above.
TestResult wilcoxon_signed_rank(const std::vector<double>& deltas, const WilcoxonOptions& opts = {});
TestResult wilcoxon_signed_rank(const DeltaSeries& series, const WilcoxonOptions& opts = {});

// P(T+ <= w) under the null for the given (doubled, integer) ranks.
double signed_rank_cdf(const std::vector<long>& doubled_ranks, long doubled_w);

}  // namespace repacc::stats
