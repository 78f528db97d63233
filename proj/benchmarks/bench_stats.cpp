#include <random>

#include <benchmark/benchmark.h>

#include "repacc/stats.hpp"

namespace {

using namespace repacc::stats;

std::vector<double> normal_draws(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.3, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

void BM_WilcoxonExact(benchmark::State& state) {
  const auto d = normal_draws(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(wilcoxon_signed_rank(d));
}
BENCHMARK(BM_WilcoxonExact)->Arg(8)->Arg(13)->Arg(25);

void BM_Krippendorff(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> score(1, 5);
  RatingMatrix m(3, std::vector<std::optional<double>>(static_cast<std::size_t>(state.range(0))));
  for (auto& row : m)
    for (auto& c : row) c = score(rng);
  for (auto _ : state) benchmark::DoNotOptimize(krippendorff_alpha_ordinal(m));
}
BENCHMARK(BM_Krippendorff)->Arg(500)->Arg(5000);

void BM_BootstrapSlope(benchmark::State& state) {
  const auto x = normal_draws(13, 3);
  auto y = normal_draws(13, 4);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] -= x[i];
  ResampleOptions opts;
  opts.iterations = static_cast<std::size_t>(state.range(0));
  opts.seed = 5;
  for (auto _ : state) benchmark::DoNotOptimize(bootstrap_slope(x, y, opts));
}
BENCHMARK(BM_BootstrapSlope)->Arg(10000);

void BM_Jaccard(benchmark::State& state) {
  std::vector<std::string> a, b;
  for (int i = 0; i < 10; ++i) {
    a.push_back("fact " + std::to_string(i));
    b.push_back("fact " + std::to_string(i * 2));
  }
  for (auto _ : state) benchmark::DoNotOptimize(jaccard(a, b));
}
BENCHMARK(BM_Jaccard);

}  // namespace

BENCHMARK_MAIN();
