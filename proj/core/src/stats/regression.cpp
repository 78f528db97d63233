#include "repacc/stats/regression.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>

#include "repacc/error.hpp"

namespace repacc::stats {

namespace {

double t_two_sided(double t, double df) {
  boost::math::students_t dist(df);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

double t_crit(double df) {
  boost::math::students_t dist(df);
  return boost::math::quantile(boost::math::complement(dist, 0.025));
}

}  // namespace

double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) fail(Errc::DegenerateX, "x has zero variance");
  return sxy / sxx;
}

TestResult SimpleRegression::result() const {
  TestResult r;
  r.statistic = "slope";
  r.value = slope;
  r.p_value = slope_p;
  r.ci = slope_ci;
  r.n = n;
  r.method = "ols";
  r.extra = {{"intercept", intercept}, {"r2", r2}, {"slope_se", slope_se}};
  return r;
}

SimpleRegression linear_regression(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) fail(Errc::LengthMismatch, "regression inputs differ in length");
  if (x.size() < 3) fail(Errc::InvalidArgument, "regression needs at least 3 points");
  const std::size_t n = x.size();
  const double nn = static_cast<double>(n);
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= nn;
  my /= nn;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) fail(Errc::DegenerateX, "x has zero variance");
  SimpleRegression r;
  r.n = n;
  r.slope = sxy / sxx;
  r.intercept = my - r.slope * mx;
  double sse = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = y[i] - (r.intercept + r.slope * x[i]);
    sse += e * e;
  }
  r.r2 = syy == 0.0 ? 1.0 : 1.0 - sse / syy;
  const double df = nn - 2.0;
  r.slope_se = std::sqrt(sse / df / sxx);
  if (r.slope_se == 0.0) {
    r.slope_p = r.slope == 0.0 ? 1.0 : 0.0;
    r.slope_ci = {r.slope, r.slope};
  } else {
    r.slope_p = t_two_sided(r.slope / r.slope_se, df);
    const double h = t_crit(df) * r.slope_se;
    r.slope_ci = {r.slope - h, r.slope + h};
  }
  return r;
}

const Coefficient& MultipleRegression::at(const std::string& name) const {
  for (const auto& c : coefficients)
    if (c.name == name) return c;
  fail(Errc::UnknownId, "no coefficient " + name);
}

nlohmann::json MultipleRegression::to_json() const {
  nlohmann::json cs = nlohmann::json::array();
  for (const auto& c : coefficients)
    cs.push_back({{"name", c.name}, {"estimate", c.estimate}, {"se", c.se}, {"t", c.t}, {"p", c.p},
                  {"ci", {c.ci.first, c.ci.second}}, {"vif", c.vif}});
  return {{"coefficients", cs}, {"r2", r2}, {"adj_r2", adj_r2}, {"n", n}, {"df_resid", df_resid}};
}

namespace {

struct Fit {
  Eigen::VectorXd beta;
  Eigen::VectorXd resid;
  Eigen::MatrixXd xtx_inv;
};

Fit fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  if (qr.rank() < X.cols()) fail(Errc::Collinear, "design matrix is rank deficient");
  Fit f;
  f.beta = qr.solve(y);
  f.resid = y - X * f.beta;
  f.xtx_inv = (X.transpose() * X).inverse();
  return f;
}

double r_squared(const Eigen::VectorXd& y, const Eigen::VectorXd& resid) {
  const double sst = (y.array() - y.mean()).square().sum();
  return sst == 0.0 ? 1.0 : 1.0 - resid.squaredNorm() / sst;
}

}  // namespace

MultipleRegression multiple_regression(const std::vector<double>& y, const std::vector<std::vector<double>>& columns,
                                       const std::vector<std::string>& names) {
  const std::size_t n = y.size();
  const std::size_t p = columns.size();
  if (names.size() != p) fail(Errc::LengthMismatch, "one name per predictor");
  if (p == 0) fail(Errc::InvalidArgument, "at least one predictor");
  for (const auto& c : columns)
    if (c.size() != n) fail(Errc::LengthMismatch, "predictor length differs from y");
  if (n <= p + 1) fail(Errc::InvalidArgument, "needs more observations than parameters");

  Eigen::MatrixXd X(n, p + 1);
  Eigen::VectorXd Y(n);
  for (std::size_t i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    Y(i) = y[i];
    for (std::size_t j = 0; j < p; ++j) X(i, j + 1) = columns[j][i];
  }
  const auto f = fit(X, Y);
  MultipleRegression out;
  out.n = n;
  out.df_resid = n - p - 1;
  const double df = static_cast<double>(out.df_resid);
  const double s2 = f.resid.squaredNorm() / df;
  out.r2 = r_squared(Y, f.resid);
  out.adj_r2 = 1.0 - (1.0 - out.r2) * (static_cast<double>(n) - 1.0) / df;
  const double tc = t_crit(df);
  for (std::size_t j = 0; j <= p; ++j) {
    Coefficient c;
    c.name = j == 0 ? "intercept" : names[j - 1];
    c.estimate = f.beta(static_cast<Eigen::Index>(j));
    c.se = std::sqrt(s2 * f.xtx_inv(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)));
    c.t = c.se == 0.0 ? 0.0 : c.estimate / c.se;
    c.p = c.se == 0.0 ? (c.estimate == 0.0 ? 1.0 : 0.0) : t_two_sided(c.t, df);
    c.ci = {c.estimate - tc * c.se, c.estimate + tc * c.se};
    if (j > 0 && p > 1) {
      Eigen::MatrixXd Xo(n, p);
      Eigen::Index col = 0;
      for (std::size_t q = 0; q <= p; ++q)
        if (q != j) Xo.col(col++) = X.col(static_cast<Eigen::Index>(q));
      const Eigen::VectorXd xj = X.col(static_cast<Eigen::Index>(j));
      const auto aux = fit(Xo, xj);
      const double r2j = r_squared(xj, aux.resid);
      c.vif = r2j >= 1.0 ? std::numeric_limits<double>::infinity() : 1.0 / (1.0 - r2j);
    }
    out.coefficients.push_back(c);
  }
  return out;
}

}  // namespace repacc::stats
