#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "repacc/stats/test_result.hpp"

namespace repacc::stats {

struct RefusalPatterns {
  std::string version;
  std::vector<std::string> patterns;

  static RefusalPatterns load(const std::filesystem::path& p);
  static RefusalPatterns load_default();
};

enum class RefusalMode {
  Strict,  // a pattern is the first non-whitespace text
  Broad    // a pattern appears anywhere
};

// Case-insensitive; typographic apostrophes are folded to ASCII first.
bool classify_refusal(const std::string& response_text, const RefusalPatterns& patterns, RefusalMode mode);

// Share of responses classified as refusals.
double hedging_rate(const std::vector<std::string>& responses, const RefusalPatterns& patterns, RefusalMode mode);

struct LengthScoreItem {
  std::string group;
  std::string response_text;
  double score = 0.0;
};

// Pearson r of response length (code points) against score, per group.
// Throws GroupTooSmall for a group with fewer than 3 items.
std::map<std::string, TestResult> length_score_correlation(const std::vector<LengthScoreItem>& items);

}  // namespace repacc::stats
