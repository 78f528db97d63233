#pragma once

#include <optional>
#include <vector>

#include "repacc/judging.hpp"
#include "repacc/stats/test_result.hpp"

namespace repacc::stats {

TestResult spearman_rho(const std::vector<double>& x, const std::vector<double>& y);

// judges x items; nullopt marks an absent judgment.
using RatingMatrix = std::vector<std::vector<std::optional<double>>>;

enum class MissingDataConvention {
  Pairable,   // each unit's pairs weighted 1 / (m_u - 1)
  Unweighted  // every within-unit pair weighted 1
};

TestResult krippendorff_alpha_ordinal(const RatingMatrix& m,
                                      MissingDataConvention convention = MissingDataConvention::Pairable);

// Rows follow `judges`; columns are the cube's (subject, condition, qid) cells.
RatingMatrix rating_matrix(const ScoreCube& cube, const std::vector<std::string>& judges);

}  // namespace repacc::stats
