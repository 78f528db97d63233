#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>

#include <nlohmann/json.hpp>

namespace repacc::stats {

struct TestResult {
  std::string statistic;
  double value = 0.0;
  std::optional<double> p_value;
  std::optional<std::pair<double, double>> ci;
  std::size_t n = 0;
  std::optional<std::uint64_t> seed;
  std::string method;
  nlohmann::json extra = nlohmann::json::object();

  nlohmann::json to_json() const;
};

}  // namespace repacc::stats
