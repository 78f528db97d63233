#include "repacc/stats/resampling.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <thread>

#include "repacc/error.hpp"
#include "repacc/stats/descriptive.hpp"
#include "repacc/stats/regression.hpp"

namespace repacc::stats {

std::uint64_t chunk_seed(std::uint64_t seed, std::uint64_t chunk) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (chunk + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

// Unbiased draw in [0, n) that does not depend on the library's distribution code.
std::size_t draw(std::mt19937_64& rng, std::size_t n) {
  const std::uint64_t bound = n;
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = rng();
    if (r >= threshold) return static_cast<std::size_t>(r % bound);
  }
}

void shuffle(std::vector<double>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[draw(rng, i)]);
}

// Runs body(rng, i) for every iteration i, chunk by chunk with derived seeds.
template <typename Body>
void for_chunks(const ResampleOptions& opts, Body body) {
  const std::size_t chunks = std::max<std::size_t>(1, std::min(opts.chunks, opts.iterations));
  auto run_chunk = [&](std::size_t c) {
    std::mt19937_64 rng(chunk_seed(opts.seed, c));
    const std::size_t lo = c * opts.iterations / chunks;
    const std::size_t hi = (c + 1) * opts.iterations / chunks;
    for (std::size_t i = lo; i < hi; ++i) body(rng, c, i);
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(opts.threads, chunks));
  if (threads == 1) {
    for (std::size_t c = 0; c < chunks; ++c) run_chunk(c);
    return;
  }
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t)
    pool.emplace_back([&, t] {
      for (std::size_t c = t; c < chunks; c += threads) run_chunk(c);
    });
  for (auto& th : pool) th.join();
}

void check_inputs(const std::vector<double>& x, const std::vector<double>& y, const ResampleOptions& opts) {
  if (x.size() != y.size()) fail(Errc::LengthMismatch, "resampling inputs differ in length");
  if (x.size() < 3) fail(Errc::InvalidArgument, "resampling needs at least 3 points");
  if (opts.iterations < 1000) fail(Errc::InvalidArgument, "resampling needs at least 1000 iterations");
}

}  // namespace

double BootstrapResult::fraction_below(double threshold) const {
  if (slopes.empty()) return 0.0;
  const auto n = std::count_if(slopes.begin(), slopes.end(), [&](double s) { return s < threshold; });
  return static_cast<double>(n) / static_cast<double>(slopes.size());
}

BootstrapResult bootstrap_slope(const std::vector<double>& x, const std::vector<double>& y,
                                const ResampleOptions& opts) {
  check_inputs(x, y, opts);
  BootstrapResult out;
  out.slopes.assign(opts.iterations, 0.0);
  std::vector<std::size_t> redraws(std::max<std::size_t>(1, opts.chunks), 0);
  const std::size_t n = x.size();
  for_chunks(opts, [&](std::mt19937_64& rng, std::size_t c, std::size_t i) {
    std::vector<double> bx(n), by(n);
    for (;;) {
      for (std::size_t t = 0; t < n; ++t) {
        const auto k = draw(rng, n);
        bx[t] = x[k];
        by[t] = y[k];
      }
      if (std::any_of(bx.begin(), bx.end(), [&](double v) { return v != bx[0]; })) break;
      ++redraws[c];
    }
    out.slopes[i] = ols_slope(bx, by);
  });
  for (auto r : redraws) out.redraws += r;

  auto& r = out.result;
  r.statistic = "slope";
  r.value = ols_slope(x, y);
  r.ci = std::make_pair(quantile(out.slopes, 0.025), quantile(out.slopes, 0.975));
  r.n = n;
  r.seed = opts.seed;
  r.method = "percentile bootstrap";
  r.extra = {{"iterations", opts.iterations},
             {"fraction_below_zero", out.fraction_below(0.0)},
             {"redraws", out.redraws},
             {"chunks", opts.chunks}};
  return out;
}

PermutationResult permutation_slope(const std::vector<double>& x, const std::vector<double>& level,
                                    PermutationScheme scheme, const ResampleOptions& opts) {
  check_inputs(x, level, opts);
  const std::size_t n = x.size();
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = level[i] - x[i];
  const double observed = ols_slope(x, d);

  PermutationResult out;
  out.null_slopes.assign(opts.iterations, 0.0);
  for_chunks(opts, [&](std::mt19937_64& rng, std::size_t, std::size_t i) {
    std::vector<double> v = scheme == PermutationScheme::ShuffleDelta ? d : level;
    shuffle(v, rng);
    if (scheme == PermutationScheme::ShuffleLevel)
      for (std::size_t t = 0; t < n; ++t) v[t] -= x[t];
    out.null_slopes[i] = ols_slope(x, v);
  });

  auto& ns = out.null;
  ns.mean = mean(out.null_slopes);
  ns.sd = sd(out.null_slopes);
  ns.min = *std::min_element(out.null_slopes.begin(), out.null_slopes.end());
  ns.max = *std::max_element(out.null_slopes.begin(), out.null_slopes.end());
  const double tol = 1e-12 * (1.0 + std::abs(observed));
  std::size_t centered = 0;
  for (double s : out.null_slopes) {
    if (std::abs(s) >= std::abs(observed) - tol) ++ns.as_extreme;
    if (std::abs(s - ns.mean) >= std::abs(observed - ns.mean) - tol) ++centered;
  }
  const double iters = static_cast<double>(opts.iterations);
  out.p_centered = static_cast<double>(centered) / iters;

  auto& r = out.result;
  r.statistic = "slope";
  r.value = observed;
  r.p_value = static_cast<double>(ns.as_extreme) / iters;
  r.n = n;
  r.seed = opts.seed;
  r.method = scheme == PermutationScheme::ShuffleDelta ? "permutation, shuffle_delta" : "permutation, shuffle_level";
  r.extra = {{"iterations", opts.iterations}, {"null_mean", ns.mean},          {"null_sd", ns.sd},
             {"null_min", ns.min},            {"null_max", ns.max},            {"as_extreme", ns.as_extreme},
             {"p_centered", out.p_centered},  {"chunks", opts.chunks}};
  return out;
}

}  // namespace repacc::stats
