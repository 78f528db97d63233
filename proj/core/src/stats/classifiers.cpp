#include "repacc/stats/classifiers.hpp"

#include <algorithm>

#include "repacc/error.hpp"
#include "repacc/stats/descriptive.hpp"
#include "repacc/text.hpp"

namespace repacc::stats {

RefusalPatterns RefusalPatterns::load(const std::filesystem::path& p) {
  auto j = io::read_json(p);
  RefusalPatterns r;
  r.version = j.at("version");
  r.patterns = j.at("patterns").get<std::vector<std::string>>();
  if (r.patterns.empty()) fail(Errc::Parse, p.string() + ": empty pattern list");
  return r;
}

RefusalPatterns RefusalPatterns::load_default() { return load(io::data_dir() / "refusal_patterns.json"); }

namespace {

std::string fold(const std::string& s) {
  auto t = text::replace_all(s, "’", "'");
  t = text::replace_all(t, "‘", "'");
  return text::ascii_lower(t);
}

}  // namespace

bool classify_refusal(const std::string& response_text, const RefusalPatterns& patterns, RefusalMode mode) {
  const auto body = fold(response_text);
  const auto start = body.find_first_not_of(" \t\r\n");
  if (start == std::string::npos) return false;
  for (const auto& p : patterns.patterns) {
    const auto pat = fold(p);
    if (mode == RefusalMode::Broad ? body.find(pat) != std::string::npos : body.compare(start, pat.size(), pat) == 0)
      return true;
  }
  return false;
}

double hedging_rate(const std::vector<std::string>& responses, const RefusalPatterns& patterns, RefusalMode mode) {
  if (responses.empty()) fail(Errc::InvalidArgument, "hedging rate of no responses");
  const auto n = std::count_if(responses.begin(), responses.end(),
                               [&](const std::string& r) { return classify_refusal(r, patterns, mode); });
  return static_cast<double>(n) / static_cast<double>(responses.size());
}

std::map<std::string, TestResult> length_score_correlation(const std::vector<LengthScoreItem>& items) {
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> groups;
  for (const auto& it : items) {
    auto& [len, score] = groups[it.group];
    len.push_back(static_cast<double>(text::utf8_length(it.response_text)));
    score.push_back(it.score);
  }
  std::map<std::string, TestResult> out;
  for (const auto& [g, xy] : groups) {
    if (xy.first.size() < 3) fail(Errc::GroupTooSmall, g + " has " + std::to_string(xy.first.size()) + " items");
    TestResult r;
    r.statistic = "r";
    r.value = pearson(xy.first, xy.second);
    r.n = xy.first.size();
    r.method = "pearson, length in code points";
    out[g] = r;
  }
  return out;
}

}  // namespace repacc::stats
