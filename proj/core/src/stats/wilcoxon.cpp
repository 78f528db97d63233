#include "repacc/stats/wilcoxon.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <boost/math/distributions/normal.hpp>

#include "repacc/error.hpp"
#include "repacc/stats/descriptive.hpp"

namespace repacc::stats {

double signed_rank_cdf(const std::vector<long>& doubled_ranks, long doubled_w) {
  const long total = std::accumulate(doubled_ranks.begin(), doubled_ranks.end(), 0L);
  if (doubled_w < 0) return 0.0;
  if (doubled_w >= total) return 1.0;
  // ways[s] = number of sign assignments with positive rank sum s
  std::vector<double> ways(static_cast<std::size_t>(total) + 1, 0.0);
  ways[0] = 1.0;
  long reach = 0;
  for (long r : doubled_ranks) {
    for (long s = reach; s >= 0; --s)
      if (ways[static_cast<std::size_t>(s)] != 0.0) ways[static_cast<std::size_t>(s + r)] += ways[static_cast<std::size_t>(s)];
    reach += r;
  }
  double below = 0.0;
  for (long s = 0; s <= doubled_w; ++s) below += ways[static_cast<std::size_t>(s)];
  return below / std::ldexp(1.0, static_cast<int>(doubled_ranks.size()));
}

TestResult wilcoxon_signed_rank(const std::vector<double>& deltas, const WilcoxonOptions& opts) {
  std::vector<double> d;
  for (double x : deltas)
    if (std::abs(x) > opts.zero_tol) d.push_back(x);
  const std::size_t zeros = deltas.size() - d.size();
  if (d.size() < 5)
    fail(Errc::TooFewPairs, "signed-rank test needs at least 5 non-zero differences, got " + std::to_string(d.size()));

  std::vector<double> mag(d.size());
  std::transform(d.begin(), d.end(), mag.begin(), [](double x) { return std::abs(x); });
  const auto ranks = midranks(mag, opts.tie_tol);
  double t_plus = 0.0, t_minus = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) (d[i] > 0 ? t_plus : t_minus) += ranks[i];
  const double w = std::min(t_plus, t_minus);
  const std::size_t n = d.size();

  TestResult r;
  r.statistic = "W";
  r.value = w;
  r.n = n;
  r.extra = {{"t_plus", t_plus}, {"t_minus", t_minus}, {"zeros_dropped", zeros}, {"zero_handling", "drop"},
             {"ties", "midrank"}};
  if (n <= opts.exact_max_n) {
    std::vector<long> doubled(n);
    std::transform(ranks.begin(), ranks.end(), doubled.begin(), [](double x) { return std::lround(2.0 * x); });
    r.p_value = std::min(1.0, 2.0 * signed_rank_cdf(doubled, std::lround(2.0 * w)));
    r.method = "exact";
  } else {
    const double nn = static_cast<double>(n);
    double mu = nn * (nn + 1.0) / 4.0;
    double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0;
    std::map<double, std::size_t> tie_groups;
    for (double x : ranks) ++tie_groups[x];
    for (const auto& [_, t] : tie_groups) {
      const double tt = static_cast<double>(t);
      var -= (tt * tt * tt - tt) / 48.0;
    }
    const double z = (std::abs(w - mu) - 0.5) / std::sqrt(var);
    boost::math::normal_distribution<double> norm;
    r.p_value = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(norm, std::max(0.0, z))));
    r.method = "normal";
    r.extra["z"] = z;
  }
  return r;
}

TestResult wilcoxon_signed_rank(const DeltaSeries& series, const WilcoxonOptions& opts) {
  auto r = wilcoxon_signed_rank(series.values(), opts);
  r.extra["condition_a"] = series.condition_a;
  r.extra["condition_b"] = series.condition_b;
  return r;
}

}  // namespace repacc::stats
