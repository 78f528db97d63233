#include "repacc/stats/overlap.hpp"

#include <algorithm>
#include <set>
#include <tuple>

#include "repacc/error.hpp"

namespace repacc::stats {

using nlohmann::json;

double OverlapMatrix::at(const std::string& a, const std::string& b) const {
  if (a == b) fail(Errc::InvalidArgument, "overlap diagonal is excluded");
  auto it = pairs.find(a < b ? std::make_pair(a, b) : std::make_pair(b, a));
  if (it == pairs.end()) fail(Errc::UnknownId, "no overlap for " + a + " / " + b);
  return it->second;
}

json OverlapMatrix::to_json() const {
  json ps = json::array();
  for (const auto& [k, v] : pairs)
    ps.push_back({{"system_a", k.first}, {"system_b", k.second}, {"mean_jaccard", v},
                  {"questions", per_question.at(k).size()}});
  return {{"mode", mode == OverlapMode::Exact ? "exact" : "soft"},
          {"threshold", threshold},
          {"k", k},
          {"unique_dedup", unique_dedup},
          {"pairs", ps},
          {"share_zero_rate", share_zero_rate},
          {"mean_overlap", mean_overlap}};
}

std::vector<std::string> top_k(const std::vector<std::string>& list, std::size_t k, bool unique_dedup) {
  std::vector<std::string> out(list.begin(), list.begin() + static_cast<std::ptrdiff_t>(std::min(k, list.size())));
  if (unique_dedup) {
    std::set<std::string> seen;
    std::vector<std::string> uniq;
    for (auto& s : out)
      if (seen.insert(s).second) uniq.push_back(std::move(s));
    out = std::move(uniq);
  }
  return out;
}

double jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::map<std::string, std::pair<std::size_t, std::size_t>> counts;
  for (const auto& s : a) ++counts[s].first;
  for (const auto& s : b) ++counts[s].second;
  std::size_t inter = 0, uni = 0;
  for (const auto& [_, c] : counts) {
    inter += std::min(c.first, c.second);
    uni += std::max(c.first, c.second);
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

std::size_t greedy_matches(const std::vector<std::vector<double>>& cosines, double threshold) {
  const double floor = threshold - 1e-9;
  std::vector<std::tuple<double, std::size_t, std::size_t>> edges;
  for (std::size_t i = 0; i < cosines.size(); ++i)
    for (std::size_t j = 0; j < cosines[i].size(); ++j)
      if (cosines[i][j] >= floor) edges.emplace_back(cosines[i][j], i, j);
  std::sort(edges.begin(), edges.end(), [](const auto& x, const auto& y) {
    if (std::get<0>(x) != std::get<0>(y)) return std::get<0>(x) > std::get<0>(y);
    return std::make_pair(std::get<1>(x), std::get<2>(x)) < std::make_pair(std::get<1>(y), std::get<2>(y));
  });
  std::set<std::size_t> used_a, used_b;
  std::size_t m = 0;
  for (const auto& [c, i, j] : edges)
    if (!used_a.count(i) && !used_b.count(j)) {
      used_a.insert(i);
      used_b.insert(j);
      ++m;
    }
  return m;
}

namespace {

template <typename Score>
OverlapMatrix overlap(const RetrievalLogs& logs, std::size_t k, bool unique_dedup, Score score) {
  OverlapMatrix out;
  out.k = k;
  out.unique_dedup = unique_dedup;
  std::size_t total = 0, zero = 0;
  double sum = 0.0;
  for (auto a = logs.begin(); a != logs.end(); ++a)
    for (auto b = std::next(a); b != logs.end(); ++b) {
      std::map<std::string, double> per;
      for (const auto& [qid, la] : a->second) {
        auto lb = b->second.find(qid);
        if (lb == b->second.end()) continue;
        const auto [j, shared] = score(top_k(la, k, unique_dedup), top_k(lb->second, k, unique_dedup));
        per[qid] = j;
        ++total;
        sum += j;
        if (!shared) ++zero;
      }
      if (per.empty()) continue;
      double s = 0.0;
      for (const auto& [_, v] : per) s += v;
      const auto key = std::make_pair(a->first, b->first);
      out.pairs[key] = s / static_cast<double>(per.size());
      out.per_question[key] = std::move(per);
    }
  if (total == 0) fail(Errc::NoSharedQuestions, "no two systems share a question");
  out.share_zero_rate = static_cast<double>(zero) / static_cast<double>(total);
  out.mean_overlap = sum / static_cast<double>(total);
  return out;
}

}  // namespace

OverlapMatrix jaccard_overlap(const RetrievalLogs& logs, std::size_t k, bool unique_dedup) {
  auto out = overlap(logs, k, unique_dedup, [](const auto& a, const auto& b) {
    const double j = jaccard(a, b);
    return std::make_pair(j, j > 0.0);
  });
  out.mode = OverlapMode::Exact;
  return out;
}

OverlapMatrix soft_jaccard(const RetrievalLogs& logs, ModelProvider& embedder, double threshold, std::size_t k,
                           bool unique_dedup) {
  if (!(threshold > 0.0 && threshold <= 1.0)) fail(Errc::InvalidArgument, "threshold must lie in (0, 1]");
  std::set<std::string> texts;
  for (const auto& [_, by_q] : logs)
    for (const auto& [__, list] : by_q)
      for (auto& t : top_k(list, k, unique_dedup)) texts.insert(t);
  std::vector<std::string> ordered(texts.begin(), texts.end());
  std::map<std::string, EmbeddingVector> vec;
  if (!ordered.empty()) {
    auto vs = embed(embedder, ordered, true);
    for (std::size_t i = 0; i < ordered.size(); ++i) vec[ordered[i]] = std::move(vs[i]);
  }
  auto out = overlap(logs, k, unique_dedup, [&](const auto& a, const auto& b) {
    std::vector<std::vector<double>> cos(a.size(), std::vector<double>(b.size()));
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = 0; j < b.size(); ++j) cos[i][j] = cosine(vec.at(a[i]), vec.at(b[j]));
    const auto m = greedy_matches(cos, threshold);
    const auto uni = a.size() + b.size() - m;
    const double jv = uni == 0 ? 0.0 : static_cast<double>(m) / static_cast<double>(uni);
    return std::make_pair(jv, m > 0);
  });
  out.mode = OverlapMode::Soft;
  out.threshold = threshold;
  return out;
}

}  // namespace repacc::stats
