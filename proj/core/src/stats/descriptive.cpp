#include "repacc/stats/descriptive.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "repacc/error.hpp"
#include "repacc/stats/test_result.hpp"

namespace repacc::stats {

nlohmann::json TestResult::to_json() const {
  nlohmann::json j = {{"statistic", statistic}, {"value", value}, {"n", n}, {"method", method}};
  j["p_value"] = p_value ? nlohmann::json(*p_value) : nlohmann::json(nullptr);
  j["ci"] = ci ? nlohmann::json::array({ci->first, ci->second}) : nlohmann::json(nullptr);
  j["seed"] = seed ? nlohmann::json(*seed) : nlohmann::json(nullptr);
  if (!extra.empty()) j["extra"] = extra;
  return j;
}

double mean(const std::vector<double>& v) {
  if (v.empty()) fail(Errc::InvalidArgument, "mean of an empty list");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

double sd(const std::vector<double>& v) {
  if (v.size() < 2) fail(Errc::InvalidArgument, "sd needs at least two values");
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) fail(Errc::InvalidArgument, "quantile of an empty list");
  if (q < 0.0 || q > 1.0) fail(Errc::InvalidArgument, "quantile outside [0, 1]");
  std::sort(v.begin(), v.end());
  const double h = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::vector<double> midranks(const std::vector<double>& v, double tie_tol) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i + 1;
    while (j < idx.size() && v[idx[j]] - v[idx[j - 1]] <= tie_tol) ++j;
    const double rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t t = i; t < j; ++t) r[idx[t]] = rank;
    i = j;
  }
  return r;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) fail(Errc::LengthMismatch, "pearson inputs differ in length");
  if (x.size() < 2) fail(Errc::InvalidArgument, "pearson needs at least two pairs");
  const double mx = mean(x), my = mean(y);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) fail(Errc::DegenerateX, "pearson with zero variance");
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace repacc::stats
