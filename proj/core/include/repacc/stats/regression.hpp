#pragma once

#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "repacc/stats/test_result.hpp"

namespace repacc::stats {

struct SimpleRegression {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double slope_se = 0.0;
  std::pair<double, double> slope_ci;
  double slope_p = 1.0;
  std::size_t n = 0;

  TestResult result() const;
};

// Ordinary least squares with a two-sided t test and 95% CI on the slope.
SimpleRegression linear_regression(const std::vector<double>& x, const std::vector<double>& y);
// Slope only; throws DegenerateX.
double ols_slope(const std::vector<double>& x, const std::vector<double>& y);

struct Coefficient {
  std::string name;
  double estimate = 0.0;
  double se = 0.0;
  double t = 0.0;
  double p = 1.0;
  std::pair<double, double> ci;
  double vif = 1.0;  // 1 for the intercept
};

struct MultipleRegression {
  std::vector<Coefficient> coefficients;  // intercept first
  double r2 = 0.0;
  double adj_r2 = 0.0;
  std::size_t n = 0;
  std::size_t df_resid = 0;

  const Coefficient& at(const std::string& name) const;
  nlohmann::json to_json() const;
};

// Intercept plus the given predictor columns. Throws Collinear for a
// rank-deficient design.
MultipleRegression multiple_regression(const std::vector<double>& y, const std::vector<std::vector<double>>& columns,
                                       const std::vector<std::string>& names);

}  // namespace repacc::stats
