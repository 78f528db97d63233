// One PASS/FAIL line per acceptance criterion. Exit status is the number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "repacc/commands.hpp"
#include "repacc/error.hpp"
#include "repacc/fixtures.hpp"
#include "repacc/stats.hpp"
#include "repacc/stub_provider.hpp"
#include "repacc/text.hpp"
#include "test_util.hpp"

using namespace repacc;
using namespace repacc::stats;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Tolerances and limits.
constexpr double kWilcoxonPTol = 0.001;
constexpr double kSlopeTol = 0.02;
constexpr double kR2Tol = 0.02;
constexpr double kLevelR2Max = 0.02;
constexpr double kLowBaselineTol = 0.005;
constexpr double kBootstrapEndpointTol = 0.03;
constexpr double kNullMeanMax = 0.02;
constexpr double kNullSdTol = 0.05;
constexpr double kPermPMax = 1e-4;
constexpr double kShuffleLevelTol = 0.05;
constexpr double kPartialTol = 0.03;
constexpr double kAlphaOracleTol = 1e-9;
constexpr double kIndependentAlphaMax = 0.05;
constexpr double kExactPTol = 1e-12;
constexpr double kJaccardTol = 1e-12;
constexpr double kRuntime1 = 1.0, kRuntime2 = 1.0, kRuntime4 = 10.0, kRuntime5 = 20.0, kRuntime11 = 30.0;
constexpr std::size_t kResamples = 10000;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Table {
  PaperTable table = load_default_paper_table();
  std::vector<double> c5, c4a, c2a, d_c4a, d_c2a, literal;
  Table() {
    for (const auto& r : table.analysis_rows()) {
      c5.push_back(r.c5);
      c4a.push_back(r.c4a);
      c2a.push_back(r.c2a);
      d_c4a.push_back(r.c4a - r.c5);
      d_c2a.push_back(r.c2a - r.c5);
      literal.push_back(static_cast<double>(r.literal_count.value_or(0)) / static_cast<double>(table.questions_per_subject));
    }
  }
};

const Table& table() {
  static const Table t;
  return t;
}

ResampleOptions resample(std::uint64_t seed) {
  ResampleOptions o;
  o.iterations = kResamples;
  o.seed = seed;
  return o;
}

void c1(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto& t = table();
  const auto a = wilcoxon_signed_rank(t.d_c4a);
  const auto b = wilcoxon_signed_rank(t.d_c2a);
  const double s = seconds_since(t0);
  o.detail << "n=" << a.n << " W_C4a=" << a.value << " p=" << *a.p_value << "; W_C2a=" << b.value << " p=" << *b.p_value
           << "; " << s << "s";
  o.check(a.n == 14, "n == 14");
  o.check(a.value == 11.0 && std::abs(*a.p_value - 0.007) <= kWilcoxonPTol, "C4a W = 11, p = 0.007");
  o.check(b.value == 10.0 && std::abs(*b.p_value - 0.005) <= kWilcoxonPTol, "C2a W = 10, p = 0.005");
  o.check(s < kRuntime1, "runtime");
}

void c2(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto& t = table();
  const auto g = linear_regression(t.c5, t.d_c4a);
  const auto l = linear_regression(t.c5, t.c4a);
  const double s = seconds_since(t0);
  o.detail << "gradient slope=" << g.slope << " R2=" << g.r2 << "; level slope=" << l.slope << " R2=" << l.r2 << "; "
           << s << "s";
  o.check(std::abs(g.slope + 0.96) <= kSlopeTol, "gradient slope");
  o.check(std::abs(g.r2 - 0.82) <= kR2Tol, "gradient R2");
  o.check(std::abs(l.slope - 0.04) <= kSlopeTol, "level slope");
  o.check(l.r2 <= kLevelR2Max, "level R2");
  o.check(s < kRuntime2, "runtime");
}

void c3(Outcome& o) {
  std::vector<double> d;
  for (const auto& r : table().table.low_baseline_rows()) d.push_back(r.c4a - r.c5);
  bool all_pos = true;
  for (double x : d) all_pos = all_pos && x > 0;
  o.detail << "n=" << d.size() << " mean=" << mean(d) << " all_positive=" << all_pos;
  o.check(d.size() == 9, "9 rows");
  o.check(std::abs(mean(d) - 0.89) <= kLowBaselineTol, "mean");
  o.check(all_pos, "all positive");
}

void c4(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto b = bootstrap_slope(table().c5, table().d_c4a, resample(HeadlineOptions{}.bootstrap_seed));
  const double s = seconds_since(t0);
  const auto [lo, hi] = *b.result.ci;
  o.detail << "CI=[" << lo << ", " << hi << "] below0=" << b.fraction_below(0.0) << " seed=" << *b.result.seed << "; " << s
           << "s";
  o.check(std::abs(lo + 1.25) <= kBootstrapEndpointTol && std::abs(hi + 0.74) <= kBootstrapEndpointTol, "CI endpoints");
  o.check(b.fraction_below(0.0) == 1.0, "all slopes < 0");
  o.check(s < kRuntime4, "runtime");
}

void c5(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto seed = HeadlineOptions{}.permutation_seed;
  const auto d = permutation_slope(table().c5, table().c4a, PermutationScheme::ShuffleDelta, resample(seed));
  const auto l = permutation_slope(table().c5, table().c4a, PermutationScheme::ShuffleLevel, resample(seed));
  const double s = seconds_since(t0);
  o.detail << "shuffle_delta mean=" << d.null.mean << " sd=" << d.null.sd << " p=" << *d.result.p_value
           << "; shuffle_level mean=" << l.null.mean << "; " << s << "s";
  o.check(std::abs(d.null.mean) < kNullMeanMax, "null mean");
  o.check(std::abs(d.null.sd - 0.29) <= kNullSdTol, "null SD");
  o.check(*d.result.p_value < kPermPMax, "p");
  o.check(std::abs(l.null.mean + 1.0) <= kShuffleLevelTol, "shuffle_level mean");
  o.check(s < kRuntime5, "runtime");
}

void c6(Outcome& o) {
  const auto& t = table();
  const auto m = multiple_regression(t.d_c4a, {t.c5, t.literal}, {"baseline", "literal_fraction"});
  const auto& b = m.at("baseline");
  o.detail << "baseline partial=" << b.estimate << " CI=[" << b.ci.first << ", " << b.ci.second << "]";
  o.check(std::abs(b.estimate + 0.88) <= kPartialTol, "baseline partial");
}

void c7(Outcome& o) {
  std::mt19937_64 rng(7007);
  std::uniform_int_distribution<int> score(1, 5), judges(2, 5), items(2, 8), keep(0, 3);
  double worst = 0.0;
  std::size_t compared = 0;
  for (int trial = 0; trial < 200; ++trial) {
    RatingMatrix m(judges(rng), std::vector<std::optional<double>>(items(rng)));
    for (auto& row : m)
      for (auto& v : row)
        if (keep(rng)) v = score(rng);
    bool pairable = false;
    for (std::size_t u = 0; u < m[0].size(); ++u) {
      int present = 0;
      for (const auto& row : m) present += row[u].has_value();
      pairable = pairable || present >= 2;
    }
    if (!pairable) continue;
    const double want = oracle::krippendorff_ordinal(m);
    double got;
    try {
      got = krippendorff_alpha_ordinal(m).value;
    } catch (const Error&) {
      o.check(false, "production raised where the oracle did not");
      continue;
    }
    worst = std::max(worst, std::abs(got - want));
    ++compared;
  }
  RatingMatrix agree(4, std::vector<std::optional<double>>{1, 3, 5, 2, 4, 4, 1, 2});
  const double perfect = krippendorff_alpha_ordinal(agree).value;
  RatingMatrix big(5, std::vector<std::optional<double>>(2000));
  for (auto& row : big)
    for (auto& v : row) v = score(rng);
  const double indep = krippendorff_alpha_ordinal(big).value;
  o.detail << compared << " matrices, max |diff|=" << worst << "; perfect=" << perfect << "; independent=" << indep;
  o.check(compared >= 150, "enough comparable matrices");
  o.check(worst <= kAlphaOracleTol, "oracle equivalence");
  o.check(perfect == 1.0, "perfect agreement");
  o.check(std::abs(indep) < kIndependentAlphaMax, "independent ratings");
}

void c8(Outcome& o) {
  std::mt19937_64 rng(8008);
  std::uniform_int_distribution<int> step(-8, 8);
  double worst = 0.0;
  std::size_t cases = 0, refused = 0;
  for (std::size_t n = 1; n <= 12; ++n)
    for (int trial = 0; trial < 40; ++trial) {
      std::vector<double> d(n);
      for (auto& x : d) x = step(rng) / 4.0;
      std::size_t nonzero = 0;
      for (double x : d) nonzero += x != 0.0;
      if (nonzero < 5) {
        try {
          wilcoxon_signed_rank(d);
          o.check(false, "n < 5 accepted");
        } catch (const Error& e) {
          refused += e.code() == Errc::TooFewPairs;
        }
        continue;
      }
      const auto r = wilcoxon_signed_rank(d);
      const auto e = oracle::signed_rank_enumerate(d);
      worst = std::max(worst, std::abs(*r.p_value - e.p));
      if (r.value != e.w) o.check(false, "W differs from enumeration");
      ++cases;
    }
  std::vector<double> six = {0.2, 0.4, 0.6, 0.8, 1.0, 1.2};
  const auto p6 = *wilcoxon_signed_rank(six).p_value;
  o.detail << cases << " cases with n in [5, 12], max |p diff|=" << worst << "; " << refused
           << " below the n >= 5 precondition refused; all-positive n=6 p=" << p6;
  o.check(cases >= 200, "enough cases");
  o.check(worst <= kExactPTol, "p matches enumeration");
  o.check(p6 == 0.03125, "n=6 all positive");
}

RetrievalLogs random_logs(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, 11), len(0, 12);
  RetrievalLogs logs;
  for (const std::string sys : {"mem", "zep", "letta"})
    for (int q = 1; q <= 6; ++q) {
      std::vector<std::string> list(len(rng));
      for (auto& s : list) s = "remembers item " + std::to_string(pick(rng));
      logs[sys]["Q" + std::to_string(q)] = list;
    }
  return logs;
}

void c9(Outcome& o) {
  o.check(jaccard({"a", "b"}, {"b", "c"}) == 1.0 / 3.0, "hand fixture set");
  o.check(jaccard({"a", "a", "b"}, {"a", "b", "b"}) == 0.5, "hand fixture multiset");
  o.check(jaccard(top_k({"a", "a", "b"}, 10, true), top_k({"a", "b"}, 10, true)) == 1.0, "dedup");
  o.check(top_k({"a", "a", "b", "c"}, 3, true) == std::vector<std::string>{"a", "b"}, "truncate then dedup");
  o.check(jaccard({}, {}) == 0.0, "two empty lists");

  std::mt19937_64 rng(9009);
  StubProvider emb(json{{"id", "dup"}, {"embed", {{"mode", "text"}, {"dims", 32}}}});
  double worst_eq = 0.0;
  std::size_t monotone_breaks = 0, range_breaks = 0, symmetry_breaks = 0;
  for (int f = 0; f < 100; ++f) {
    const auto logs = random_logs(rng);
    const auto exact = jaccard_overlap(logs);
    const auto soft1 = soft_jaccard(logs, emb, 1.0);
    for (const auto& [key, per] : exact.per_question)
      for (const auto& [qid, v] : per) {
        worst_eq = std::max(worst_eq, std::abs(soft1.per_question.at(key).at(qid) - v));
        if (v < 0.0 || v > 1.0) ++range_breaks;
        const auto& a = logs.at(key.first).at(qid);
        const auto& b = logs.at(key.second).at(qid);
        if (jaccard(top_k(a, 10, true), top_k(b, 10, true)) != jaccard(top_k(b, 10, true), top_k(a, 10, true)))
          ++symmetry_breaks;
      }
    std::optional<OverlapMatrix> prev;
    for (double th : {0.2, 0.4, 0.6, 0.8, 0.9, 1.0}) {
      auto cur = soft_jaccard(logs, emb, th);
      if (prev)
        for (const auto& [key, per] : cur.per_question)
          for (const auto& [qid, v] : per)
            if (v > prev->per_question.at(key).at(qid) + kJaccardTol) ++monotone_breaks;
      prev = std::move(cur);
    }
  }
  o.detail << "100 fixtures; soft(1.0) vs exact max |diff|=" << worst_eq << "; monotonicity breaks=" << monotone_breaks
           << "; range breaks=" << range_breaks << "; symmetry breaks=" << symmetry_breaks;
  o.check(worst_eq <= kJaccardTol, "soft at 1.0 equals exact");
  o.check(monotone_breaks == 0, "monotone in threshold");
  o.check(range_breaks == 0 && symmetry_breaks == 0, "range and symmetry");
}

void c10(Outcome& o) {
  std::mt19937_64 rng(10010);
  std::uniform_int_distribution<int> step(195, 975);
  std::size_t mismatches = 0;
  for (int f = 0; f < 500; ++f) {
    std::vector<std::pair<double, double>> pairs(1 + f % 39);
    for (auto& [b, a] : pairs) {
      b = step(rng) / 195.0;
      a = step(rng) / 195.0;
    }
    const auto t = anchor_transitions(pairs);
    const auto r = oracle::transition_recount(pairs);
    for (int i = 1; i <= 5; ++i)
      for (int j = 1; j <= 5; ++j)
        if (t.at(i, j) != r[i - 1][j - 1]) ++mismatches;
  }
  const auto one = anchor_transitions({{1.4, 2.3}});
  o.detail << "500 fixtures, mismatched cells=" << mismatches << "; 1.4->2.3 counted at (1,2)=" << one.at(1, 2);
  o.check(mismatches == 0, "recount");
  o.check(one.at(1, 2) == 1 && one.upward == 1, "1.4 -> 2.3");
}

std::map<std::string, std::vector<Chapter>> heldout_chapters(const CommandContext& c) {
  std::map<std::string, std::vector<Chapter>> out;
  for (const auto& s : c.manifest().ids()) {
    const auto dir = c.workspace.subject_dir(s);
    const auto corpus = Corpus::from_json(io::read_json(dir / "corpus.json"));
    const auto split = CorpusSplit::from_json(io::read_json(dir / "split.json"));
    out[s] = heldout_part(corpus, split).chapters;
  }
  return out;
}

void full_run(const CommandContext& c) {
  for (const auto& s : c.manifest().ids()) {
    cmd_pipeline(c, s);
    cmd_battery(c, s);
  }
  cmd_run(c, {});
  cmd_judge(c, {});
  cmd_stats(c);
}

void c11(Outcome& o) {
  const auto config = testutil::toy_dir() / "config.json";
  testutil::TempDir a("accept-a"), b("accept-b");
  const auto t0 = std::chrono::steady_clock::now();
  const auto ctx_a = load_context(a.path(), config);
  full_run(ctx_a);
  const double s = seconds_since(t0);
  const auto ctx_b = load_context(b.path(), config);
  full_run(ctx_b);
  const auto bytes_a = testutil::tree_bytes(a.path());
  const bool identical = bytes_a == testutil::tree_bytes(b.path());

  const auto held = heldout_chapters(ctx_a);
  const auto iso = isolation_scan(ctx_a.workspace.run_dir(ctx_a.config.run_id), held);

  // Plant a stem that repeats seven held-out tokens verbatim.
  const auto battery = load_battery(ctx_a.workspace.subject_dir("alder") / "battery.json");
  const auto& chapter = held.at("alder").front();
  const auto words = text::split_whitespace(chapter.text);
  std::string planted = "Consider this:";
  for (std::size_t i = 0; i < 7; ++i) planted += " " + words[i + 10];
  planted += "?";
  auto j = battery.to_json();
  j["frozen"] = false;
  j["checksum"] = "";
  auto draft = Battery::from_json(j);
  auto q = draft.questions().front();
  q.qid = "Q999";
  q.stem = planted;
  draft.add(q);
  bool blocked = false;
  try {
    freeze(draft, held.at("alder"));
  } catch (const Error& e) {
    blocked = e.code() == Errc::LeakageBlock;
  }
  bool clean_freezes = true;
  try {
    auto unplanted = Battery::from_json(j);
    freeze(unplanted, held.at("alder"));
  } catch (const Error&) {
    clean_freezes = false;
  }

  o.detail << "first run " << s << "s, " << bytes_a.size() << " bytes, identical=" << identical << "; isolation scanned "
           << iso.contexts_scanned << " contexts, tagged=" << iso.heldout_tagged_segments
           << " overlaps=" << iso.overlaps.size() << "; planted 7-gram blocked=" << blocked;
  o.check(s < kRuntime11, "runtime");
  o.check(identical, "byte-identical reruns");
  o.check(iso.contexts_scanned > 0 && iso.clean(), "isolation scan clean");
  o.check(blocked, "planted 7-gram blocks freeze");
  o.check(clean_freezes, "shipped battery refreezes without the plant");
}

struct CalRow {
  const char* judge;
  double verbatim, paraphrased, short_correct, long_correct;
  bool expect[4];
};

void c12(Outcome& o) {
  // Per-judge calibration means; expected flags under the default thresholds.
  const CalRow rows[] = {{"haiku", 5.00, 4.75, 3.80, 5.00, {true, true, true, true}},
                         {"sonnet", 5.00, 5.00, 4.35, 5.00, {true, true, true, true}},
                         {"opus", 5.00, 5.00, 4.20, 5.00, {true, true, true, true}},
                         {"gpt-4o", 5.00, 5.00, 4.05, 3.35, {true, true, true, false}},
                         {"gpt-5.4", 5.00, 5.00, 4.20, 4.80, {true, true, true, true}},
                         {"gemini-flash", 5.00, 4.70, 3.85, 3.80, {true, true, true, false}},
                         {"gemini-pro", 4.15, 3.55, 2.85, 1.20, {false, false, true, false}}};
  const auto fixtures = load_default_calibration_fixtures();
  constexpr std::size_t reps = 20;
  std::size_t matched = 0;
  bool haiku_all = false, pro_fails = false;
  for (const auto& r : rows) {
    StubProvider judge(
        scripted_judge_table(r.judge, fixtures, reps, r.verbatim, r.paraphrased, r.short_correct, r.long_correct));
    const auto rep = calibration_diagnostic(judge, fixtures, reps);
    const bool got[4] = {rep.verbatim.pass, rep.paraphrased.pass, rep.short_correct.pass, rep.long_correct.pass};
    bool same = true;
    for (int i = 0; i < 4; ++i) same = same && got[i] == r.expect[i];
    matched += same;
    if (std::string(r.judge) == "haiku") haiku_all = rep.all_pass();
    if (std::string(r.judge) == "gemini-pro") {
      pro_fails = !rep.verbatim.pass && !rep.long_correct.pass;
      o.detail << "gemini-pro means " << rep.verbatim.mean << "/" << rep.paraphrased.mean << "/" << rep.short_correct.mean
               << "/" << rep.long_correct.mean << "; ";
    }
  }
  o.detail << matched << "/7 rows reproduce their flag pattern; haiku all pass=" << haiku_all
           << "; gemini-pro fails verbatim and long=" << pro_fails;
  o.check(matched == 7, "all rows");
  o.check(haiku_all, "haiku row");
  o.check(pro_fails, "gemini-pro row");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria = {
      {"wilcoxon fixture", c1},
      {"gradient regression fixture", c2},
      {"low-baseline mean", c3},
      {"bootstrap CI", c4},
      {"permutation nulls", c5},
      {"composition regression", c6},
      {"krippendorff oracle equivalence", c7},
      {"wilcoxon exactness", c8},
      {"jaccard properties", c9},
      {"anchor-transition recount", c10},
      {"end-to-end stub determinism", c11},
      {"calibration flag pattern", c12},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    failures += !o.pass;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.str().c_str());
    std::fflush(stdout);
  }
  return failures;
}
