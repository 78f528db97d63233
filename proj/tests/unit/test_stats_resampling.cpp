#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "repacc/stats.hpp"

using namespace repacc::stats;

namespace {

const std::vector<double> kX = {1.02, 1.03, 1.26, 1.67, 1.1, 1.45, 2.2, 1.9, 2.6, 1.3, 2.9, 1.8, 1.15, 2.4};
std::vector<double> level() {
  std::vector<double> y;
  for (std::size_t i = 0; i < kX.size(); ++i) y.push_back(2.3 + 0.05 * kX[i] + 0.1 * std::sin(3.0 * i));
  return y;
}

ResampleOptions opts(std::size_t iterations, std::uint64_t seed, std::size_t threads) {
  ResampleOptions o;
  o.iterations = iterations;
  o.seed = seed;
  o.threads = threads;
  return o;
}

}  // namespace

TEST(Resampling, ChunkSeedsAreDistinct) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s : {0ull, 1ull, 20260411ull})
    for (std::uint64_t c = 0; c < 8; ++c) seen.insert(chunk_seed(s, c));
  EXPECT_EQ(seen.size(), 24u);
  EXPECT_EQ(chunk_seed(7, 3), chunk_seed(7, 3));
}

TEST(Bootstrap, ThreadCountDoesNotChangeResult) {
  const auto y = level();
  std::vector<double> delta(kX.size());
  for (std::size_t i = 0; i < kX.size(); ++i) delta[i] = y[i] - kX[i];
  const auto one = bootstrap_slope(kX, delta, opts(4000, 99, 1));
  for (std::size_t t : {2u, 3u, 8u}) {
    const auto many = bootstrap_slope(kX, delta, opts(4000, 99, t));
    EXPECT_EQ(many.slopes, one.slopes);
    EXPECT_EQ(*many.result.ci, *one.result.ci);
  }
  EXPECT_EQ(one.slopes.size(), 4000u);
  EXPECT_EQ(*one.result.seed, 99u);
  EXPECT_NE(bootstrap_slope(kX, delta, opts(4000, 100, 1)).slopes, one.slopes);
}

TEST(Bootstrap, PercentileIntervalBracketsObserved) {
  const auto y = level();
  std::vector<double> delta(kX.size());
  for (std::size_t i = 0; i < kX.size(); ++i) delta[i] = y[i] - kX[i];
  const auto b = bootstrap_slope(kX, delta, opts(5000, 1, 1));
  const auto [lo, hi] = *b.result.ci;
  EXPECT_LT(lo, b.result.value);
  EXPECT_GT(hi, b.result.value);
  EXPECT_DOUBLE_EQ(b.result.value, ols_slope(kX, delta));
  std::size_t below = std::count_if(b.slopes.begin(), b.slopes.end(), [](double s) { return s < 0; });
  EXPECT_DOUBLE_EQ(b.fraction_below(0.0), static_cast<double>(below) / 5000.0);
  auto sorted = b.slopes;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_DOUBLE_EQ(lo, quantile(sorted, 0.025));
  EXPECT_DOUBLE_EQ(hi, quantile(sorted, 0.975));
}

TEST(Bootstrap, ZeroVarianceResamplesAreRedrawn) {
  const std::vector<double> x = {1, 1, 1, 1, 1, 2}, y = {0.5, 0.4, 0.6, 0.5, 0.3, 0.1};
  const auto b = bootstrap_slope(x, y, opts(2000, 4, 1));
  EXPECT_GT(b.redraws, 0u);
  EXPECT_EQ(b.slopes.size(), 2000u);
  for (double s : b.slopes) EXPECT_TRUE(std::isfinite(s));
}

TEST(Permutation, NullSummaryIsConsistent) {
  const auto y = level();
  for (auto scheme : {PermutationScheme::ShuffleDelta, PermutationScheme::ShuffleLevel}) {
    const auto p = permutation_slope(kX, y, scheme, opts(3000, 12, 1));
    EXPECT_EQ(p.null_slopes.size(), 3000u);
    EXPECT_NEAR(p.null.mean, mean(p.null_slopes), 1e-12);
    EXPECT_NEAR(p.null.sd, sd(p.null_slopes), 1e-12);
    EXPECT_EQ(p.null.min, *std::min_element(p.null_slopes.begin(), p.null_slopes.end()));
    const double obs = p.result.value;
    std::size_t extreme =
        std::count_if(p.null_slopes.begin(), p.null_slopes.end(), [&](double s) { return std::abs(s) >= std::abs(obs); });
    EXPECT_EQ(p.null.as_extreme, extreme);
    EXPECT_DOUBLE_EQ(*p.result.p_value, static_cast<double>(extreme) / 3000.0);
    EXPECT_EQ(permutation_slope(kX, y, scheme, opts(3000, 12, 4)).null_slopes, p.null_slopes);
  }
}

TEST(Permutation, ShuffleLevelNullCentresNearMinusOne) {
  // Shuffling level breaks its link to x, leaving delta = level - x with slope near -1.
  const auto y = level();
  const auto p = permutation_slope(kX, y, PermutationScheme::ShuffleLevel, opts(5000, 3, 1));
  EXPECT_NEAR(p.null.mean, -1.0, 0.05);
  const auto d = permutation_slope(kX, y, PermutationScheme::ShuffleDelta, opts(5000, 3, 1));
  EXPECT_NEAR(d.null.mean, 0.0, 0.05);
  EXPECT_DOUBLE_EQ(d.result.value, p.result.value);
}
