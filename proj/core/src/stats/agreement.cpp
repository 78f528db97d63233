#include "repacc/stats/agreement.hpp"

#include <cmath>
#include <map>

#include <boost/math/distributions/students_t.hpp>

#include "repacc/error.hpp"
#include "repacc/stats/descriptive.hpp"

namespace repacc::stats {

TestResult spearman_rho(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) fail(Errc::LengthMismatch, "spearman inputs differ in length");
  if (x.size() < 3) fail(Errc::InvalidArgument, "spearman needs at least 3 pairs");
  TestResult r;
  r.statistic = "rho";
  r.n = x.size();
  r.value = pearson(midranks(x), midranks(y));
  r.method = "pearson on midranks";
  const double df = static_cast<double>(r.n) - 2.0;
  if (df > 0 && std::abs(r.value) < 1.0) {
    const double t = r.value * std::sqrt(df / (1.0 - r.value * r.value));
    boost::math::students_t dist(df);
    r.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
  } else {
    r.p_value = 0.0;
  }
  return r;
}

TestResult krippendorff_alpha_ordinal(const RatingMatrix& m, MissingDataConvention convention) {
  if (m.size() < 2) fail(Errc::NothingPairable, "alpha needs at least two judges");
  const std::size_t items = m.front().size();
  for (const auto& row : m)
    if (row.size() != items) fail(Errc::LengthMismatch, "rating rows differ in length");

  std::map<double, std::size_t> index;
  std::vector<std::vector<double>> units;
  for (std::size_t u = 0; u < items; ++u) {
    std::vector<double> vals;
    for (const auto& row : m)
      if (row[u]) vals.push_back(*row[u]);
    if (vals.size() < 2) continue;
    for (double v : vals) index.emplace(v, 0);
    units.push_back(std::move(vals));
  }
  if (units.empty()) fail(Errc::NothingPairable, "no item has two or more judgments");
  std::size_t next = 0;
  for (auto& [_, i] : index) i = next++;
  const std::size_t k = index.size();

  std::vector<std::vector<double>> o(k, std::vector<double>(k, 0.0));
  for (const auto& vals : units) {
    const double w = convention == MissingDataConvention::Pairable ? 1.0 / static_cast<double>(vals.size() - 1) : 1.0;
    for (std::size_t i = 0; i < vals.size(); ++i)
      for (std::size_t j = 0; j < vals.size(); ++j)
        if (i != j) o[index[vals[i]]][index[vals[j]]] += w;
  }
  std::vector<double> nc(k, 0.0);
  double n = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t d = 0; d < k; ++d) nc[c] += o[c][d];
    n += nc[c];
  }
  // ordinal metric: (sum of n_g for g between c and d) - (n_c + n_d) / 2, squared
  std::vector<double> cum(k + 1, 0.0);
  for (std::size_t c = 0; c < k; ++c) cum[c + 1] = cum[c] + nc[c];
  auto delta2 = [&](std::size_t c, std::size_t d) {
    if (c > d) std::swap(c, d);
    const double v = (cum[d + 1] - cum[c]) - (nc[c] + nc[d]) / 2.0;
    return c == d ? 0.0 : v * v;
  };
  double dobs = 0.0, dexp = 0.0;
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t d = 0; d < k; ++d) {
      const double w = delta2(c, d);
      dobs += o[c][d] * w;
      dexp += nc[c] * nc[d] * w;
    }

  TestResult r;
  r.statistic = "alpha";
  r.n = units.size();
  r.method = convention == MissingDataConvention::Pairable ? "ordinal, pairable-values weighting" : "ordinal, unweighted pairs";
  r.extra = {{"pairable_values", n}, {"categories", k}};
  if (dobs == 0.0)
    r.value = 1.0;
  else
    r.value = 1.0 - (n - 1.0) * dobs / dexp;
  return r;
}

RatingMatrix rating_matrix(const ScoreCube& cube, const std::vector<std::string>& judges) {
  RatingMatrix m(judges.size());
  for (const auto& [k, _] : cube.cells())
    for (std::size_t j = 0; j < judges.size(); ++j) {
      auto s = cube.get(k, judges[j]);
      m[j].push_back(s ? std::optional<double>(*s) : std::nullopt);
    }
  return m;
}

}  // namespace repacc::stats
