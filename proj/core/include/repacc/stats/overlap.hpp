#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "repacc/providers.hpp"

namespace repacc::stats {

// system -> qid -> ranked fact texts
using RetrievalLogs = std::map<std::string, std::map<std::string, std::vector<std::string>>>;

enum class OverlapMode { Exact, Soft };

struct OverlapMatrix {
  OverlapMode mode = OverlapMode::Exact;
  double threshold = 1.0;
  std::size_t k = 10;
  bool unique_dedup = true;
  std::map<std::pair<std::string, std::string>, double> pairs;  // key.first < key.second
  std::map<std::pair<std::string, std::string>, std::map<std::string, double>> per_question;
  double share_zero_rate = 0.0;
  double mean_overlap = 0.0;  // over every (pair, question)

  double at(const std::string& a, const std::string& b) const;
  nlohmann::json to_json() const;
};

std::vector<std::string> top_k(const std::vector<std::string>& list, std::size_t k, bool unique_dedup);
// Set Jaccard for deduplicated lists, multiset Jaccard otherwise. Two empty lists score 0.
double jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b);

OverlapMatrix jaccard_overlap(const RetrievalLogs& logs, std::size_t k = 10, bool unique_dedup = true);

// Greedy one-to-one matching in descending cosine order; matches at or above
// threshold form the intersection and union = |A| + |B| - matches.
OverlapMatrix soft_jaccard(const RetrievalLogs& logs, ModelProvider& embedder, double threshold, std::size_t k = 10,
                           bool unique_dedup = true);

std::size_t greedy_matches(const std::vector<std::vector<double>>& cosines, double threshold);

}  // namespace repacc::stats
