#include "repacc/stats/aggregate.hpp"

#include <algorithm>
#include <set>

#include "repacc/error.hpp"

namespace repacc::stats {

using nlohmann::json;

json SubjectConditionMean::to_json() const {
  return {{"subject_id", subject_id},         {"condition", condition},   {"per_judge_means", per_judge_means},
          {"panel_mean", panel_mean},         {"n_questions", n_questions}, {"effective_panel", effective_panel}};
}

namespace {

const std::vector<std::string>& judges_of(const ScoreCube& cube, const AggregateOptions& opts) {
  const auto& j = opts.judges.empty() ? cube.panel.primary : opts.judges;
  if (j.empty()) fail(Errc::InvalidArgument, "aggregation needs at least one judge");
  return j;
}

bool keep(const ScoreCube& cube, const CubeKey& k, const AggregateOptions& opts) {
  return !opts.tier || cube.tier(k.subject_id, k.qid) == *opts.tier;
}

}  // namespace

std::vector<SubjectConditionMean> aggregate(const ScoreCube& cube, const AggregateOptions& opts) {
  if (cube.empty()) fail(Errc::EmptyCell, "score cube is empty");
  const auto& judges = judges_of(cube, opts);

  struct Acc {
    std::set<std::string> qids;
    std::map<std::string, std::pair<double, std::size_t>> by_judge;
  };
  std::map<std::pair<std::string, std::string>, Acc> cells;
  for (const auto& [k, scores] : cube.cells()) {
    if (!keep(cube, k, opts)) continue;
    auto& acc = cells[{k.subject_id, k.condition}];
    acc.qids.insert(k.qid);
    for (const auto& j : judges) {
      auto it = scores.find(j);
      if (it == scores.end() || !it->second) continue;
      auto& [sum, n] = acc.by_judge[j];
      sum += *it->second;
      ++n;
    }
  }
  if (cells.empty()) fail(Errc::EmptyCell, "no questions match the tier filter");

  std::vector<SubjectConditionMean> out;
  for (const auto& [key, acc] : cells) {
    SubjectConditionMean m{key.first, key.second, {}, 0.0, acc.qids.size(), 0};
    for (const auto& [j, sn] : acc.by_judge) m.per_judge_means[j] = sn.first / static_cast<double>(sn.second);
    if (m.per_judge_means.empty()) fail(Errc::EmptyCell, key.first + " " + key.second + " has no valid judgment");
    double s = 0.0;
    for (const auto& [_, v] : m.per_judge_means) s += v;
    m.effective_panel = m.per_judge_means.size();
    m.panel_mean = s / static_cast<double>(m.effective_panel);
    out.push_back(std::move(m));
  }
  return out;
}

std::map<std::string, double> question_panel_means(const ScoreCube& cube, const std::string& subject_id,
                                                   const std::string& condition, const AggregateOptions& opts) {
  const auto& judges = judges_of(cube, opts);
  std::map<std::string, double> out;
  for (const auto& [k, scores] : cube.cells()) {
    if (k.subject_id != subject_id || k.condition != condition || !keep(cube, k, opts)) continue;
    double s = 0.0;
    std::size_t n = 0;
    for (const auto& j : judges) {
      auto it = scores.find(j);
      if (it != scores.end() && it->second) {
        s += *it->second;
        ++n;
      }
    }
    if (n) out[k.qid] = s / static_cast<double>(n);
  }
  return out;
}

std::vector<std::pair<double, double>> paired_question_means(const ScoreCube& cube, const std::string& subject_id,
                                                             const std::string& before, const std::string& after,
                                                             const AggregateOptions& opts) {
  auto a = question_panel_means(cube, subject_id, before, opts);
  auto b = question_panel_means(cube, subject_id, after, opts);
  std::vector<std::pair<double, double>> out;
  for (const auto& [qid, v] : a)
    if (auto it = b.find(qid); it != b.end()) out.emplace_back(v, it->second);
  return out;
}

const SubjectConditionMean* find_mean(const std::vector<SubjectConditionMean>& means, const std::string& subject_id,
                                      const std::string& condition) {
  for (const auto& m : means)
    if (m.subject_id == subject_id && m.condition == condition) return &m;
  return nullptr;
}

std::vector<double> DeltaSeries::values() const {
  std::vector<double> v;
  v.reserve(pairs.size());
  for (const auto& [_, d] : pairs) v.push_back(d);
  return v;
}

json DeltaSeries::to_json() const {
  json p = json::array();
  for (const auto& [s, d] : pairs) p.push_back({{"subject_id", s}, {"delta", d}});
  return {{"condition_a", condition_a}, {"condition_b", condition_b}, {"pairs", p}, {"omitted", omitted}};
}

DeltaSeries delta(const std::vector<SubjectConditionMean>& means, const std::string& condition_a,
                  const std::string& condition_b) {
  DeltaSeries out{condition_a, condition_b, {}, {}};
  std::vector<std::string> subjects;
  for (const auto& m : means)
    if (std::find(subjects.begin(), subjects.end(), m.subject_id) == subjects.end()) subjects.push_back(m.subject_id);
  for (const auto& s : subjects) {
    const auto* a = find_mean(means, s, condition_a);
    const auto* b = find_mean(means, s, condition_b);
    if (a && b)
      out.pairs.emplace_back(s, a->panel_mean - b->panel_mean);
    else
      out.omitted.push_back(s);
  }
  return out;
}

}  // namespace repacc::stats
