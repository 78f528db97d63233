#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "repacc/stats/test_result.hpp"

namespace repacc::stats {

struct ResampleOptions {
  std::size_t iterations = 10000;
  std::uint64_t seed = 0;
  std::size_t chunks = 8;   // iteration range split; each chunk has a derived seed
  std::size_t threads = 1;  // results do not depend on this
};

struct BootstrapResult {
  TestResult result;  // observed slope, percentile 95% CI
  std::vector<double> slopes;
  std::size_t redraws = 0;  // resamples discarded for zero x-variance

  double fraction_below(double threshold) const;
};

// Resamples (x, y) pairs with replacement.
BootstrapResult bootstrap_slope(const std::vector<double>& x, const std::vector<double>& y,
                                const ResampleOptions& opts);

enum class PermutationScheme {
  ShuffleDelta,  // permute delta = level - x against fixed x
  ShuffleLevel   // permute level, then recompute delta
};

struct NullSummary {
  double mean = 0.0;
  double sd = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::size_t as_extreme = 0;
};

struct PermutationResult {
  TestResult result;  // observed slope of delta on x; p = share of |null| >= |observed|
  std::vector<double> null_slopes;
  NullSummary null;
  double p_centered = 1.0;  // share of |null - null_mean| >= |observed - null_mean|
};

PermutationResult permutation_slope(const std::vector<double>& x, const std::vector<double>& level,
                                    PermutationScheme scheme, const ResampleOptions& opts);

// Seed for chunk c, derived with splitmix64.
std::uint64_t chunk_seed(std::uint64_t seed, std::uint64_t chunk);

}  // namespace repacc::stats
