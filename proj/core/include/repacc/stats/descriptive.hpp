#pragma once

#include <vector>

namespace repacc::stats {

double mean(const std::vector<double>& v);
double median(std::vector<double> v);
// Sample standard deviation (n - 1).
double sd(const std::vector<double>& v);
// Linear-interpolation quantile, q in [0, 1].
double quantile(std::vector<double> v, double q);
// 1-based ranks with ties given the mean of their positions.
std::vector<double> midranks(const std::vector<double>& v, double tie_tol = 0.0);
double pearson(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace repacc::stats
