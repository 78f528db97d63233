#include <gtest/gtest.h>

#include <functional>
#include <random>

#include "oracles.hpp"
#include "repacc/error.hpp"
#include "repacc/stats.hpp"
#include "repacc/stub_provider.hpp"

using namespace repacc;
using namespace repacc::stats;
using nlohmann::json;

namespace {

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return Errc::Io;
}

std::vector<std::pair<double, double>> random_pairs(std::mt19937_64& rng, std::size_t n) {
  // Panel means of five judges over 39 questions land on multiples of 1/195.
  std::uniform_int_distribution<int> step(195, 975);
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 0; i < n; ++i) out.emplace_back(step(rng) / 195.0, step(rng) / 195.0);
  return out;
}

std::vector<std::string> random_list(std::mt19937_64& rng, std::size_t n) {
  std::uniform_int_distribution<int> pick(0, 14);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("fact " + std::to_string(pick(rng)));
  return out;
}

}  // namespace

TEST(Bands, FloorWithTopClosed) {
  EXPECT_EQ(band(1.0), 1);
  EXPECT_EQ(band(1.99), 1);
  EXPECT_EQ(band(4.999), 4);
  EXPECT_EQ(band(5.0), 5);
  EXPECT_EQ(code_of([] { band(0.99); }), Errc::OutOfRangeScore);
  EXPECT_EQ(code_of([] { band(5.01); }), Errc::OutOfRangeScore);
  std::mt19937_64 rng(1);
  for (const auto& [b, a] : random_pairs(rng, 500)) {
    EXPECT_EQ(band(b), oracle::band_by_thresholds(b));
    EXPECT_EQ(band(a), oracle::band_by_thresholds(a));
  }
}

TEST(Transitions, SubAnchorMoveCountsAsCrossing) {
  const auto t = anchor_transitions({{1.4, 2.3}, {1.9, 1.1}, {2.0, 4.1}, {3.5, 2.9}});
  EXPECT_EQ(t.at(1, 2), 1u);
  EXPECT_EQ(t.at(1, 1), 1u);
  EXPECT_EQ(t.at(2, 4), 1u);
  EXPECT_EQ(t.at(3, 2), 1u);
  EXPECT_EQ(t.upward, 2u);
  EXPECT_EQ(t.downward, 1u);
  EXPECT_EQ(t.no_crossing, 1u);
  EXPECT_EQ(t.multi_anchor, 1u);
}

TEST(Transitions, MatchRecountAndPartitionTotal) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const auto pairs = random_pairs(rng, 30);
    const auto t = anchor_transitions(pairs);
    const auto o = oracle::transition_recount(pairs);
    std::size_t sum = 0, diag = 0;
    for (int f = 1; f <= 5; ++f)
      for (int to = 1; to <= 5; ++to) {
        EXPECT_EQ(t.at(f, to), o[f - 1][to - 1]);
        sum += t.at(f, to);
        if (f == to) diag += t.at(f, to);
      }
    EXPECT_EQ(sum, pairs.size());
    EXPECT_EQ(t.total, pairs.size());
    EXPECT_EQ(t.no_crossing, diag);
    EXPECT_EQ(t.upward + t.downward + t.no_crossing, t.total);
    EXPECT_LE(t.multi_anchor, t.upward + t.downward);
  }
}

TEST(Improvement, RawAndRoundedComparisons) {
  const std::vector<std::pair<double, double>> p = {{1.0, 1.004}, {2.0, 3.0}, {3.0, 2.5}, {1.5, 1.5}, {1.2, 2.0}};
  const auto raw = improvement_rates(p);
  EXPECT_EQ(raw.improved, 3u);
  EXPECT_EQ(raw.worse, 1u);
  EXPECT_EQ(raw.tied, 1u);
  EXPECT_DOUBLE_EQ(raw.improvement_rate, 0.6);
  EXPECT_NEAR(*raw.median_delta_improved, 0.8, 1e-12);
  EXPECT_NEAR(*raw.median_delta_worsened, -0.5, 1e-12);
  const auto rounded = improvement_rates(p, 2);
  EXPECT_EQ(rounded.improved, 2u);
  EXPECT_EQ(rounded.tied, 2u);
  EXPECT_FALSE(improvement_rates({{2.0, 1.0}}).median_delta_improved);
  EXPECT_EQ(code_of([] { improvement_rates({}); }), Errc::InvalidArgument);
}

TEST(Overlap, TopKTruncatesBeforeDedup) {
  EXPECT_EQ(top_k({"a", "a", "b", "c"}, 3, true), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(top_k({"a", "a", "b", "c"}, 3, false), (std::vector<std::string>{"a", "a", "b"}));
  EXPECT_DOUBLE_EQ(jaccard({}, {}), 0.0);
  EXPECT_DOUBLE_EQ(jaccard({"a", "a", "b"}, {"a", "b", "b"}), 0.5);
}

TEST(Overlap, JaccardMatchesNaive) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    auto a = random_list(rng, 12), b = random_list(rng, 8);
    for (bool dedup : {true, false}) {
      const double got = jaccard(top_k(a, 10, dedup), top_k(b, 10, dedup));
      EXPECT_NEAR(got, oracle::jaccard_naive(a, b, 10, dedup), 1e-12);
      EXPECT_GE(got, 0.0);
      EXPECT_LE(got, 1.0);
      EXPECT_DOUBLE_EQ(got, jaccard(top_k(b, 10, dedup), top_k(a, 10, dedup)));
    }
  }
}

TEST(Overlap, MatrixAndSoftVariant) {
  std::mt19937_64 rng(6);
  RetrievalLogs logs;
  for (const std::string sys : {"mem", "zep", "letta"})
    for (int q = 1; q <= 20; ++q) logs[sys]["Q" + std::to_string(q)] = random_list(rng, 10);
  logs["zep"]["Q1"] = {"unique a"};
  logs["mem"]["Q1"] = {"unique b"};
  const auto exact = jaccard_overlap(logs);
  EXPECT_EQ(exact.pairs.size(), 3u);
  EXPECT_DOUBLE_EQ(exact.at("zep", "mem"), exact.at("mem", "zep"));
  EXPECT_DOUBLE_EQ(exact.per_question.at({"mem", "zep"}).at("Q1"), 0.0);
  EXPECT_GT(exact.share_zero_rate, 0.0);

  StubProvider emb(json{{"id", "emb"}, {"embed", {{"mode", "text"}, {"dims", 64}}}});
  const auto soft1 = soft_jaccard(logs, emb, 1.0);
  for (const auto& [key, v] : exact.pairs) EXPECT_NEAR(soft1.pairs.at(key), v, 1e-12);
  const auto soft8 = soft_jaccard(logs, emb, 0.8);
  for (const auto& [key, per] : exact.per_question)
    for (const auto& [qid, v] : per) EXPECT_GE(soft8.per_question.at(key).at(qid) + 1e-12, v);
  EXPECT_EQ(code_of([&] { soft_jaccard(logs, emb, 0.0); }), Errc::InvalidArgument);
  RetrievalLogs lonely = {{"mem", {{"Q1", {"x"}}}}, {"zep", {{"Q2", {"x"}}}}};
  EXPECT_EQ(code_of([&] { jaccard_overlap(lonely); }), Errc::NoSharedQuestions);
}

TEST(Overlap, GreedyMatchingIsOneToOne) {
  EXPECT_EQ(greedy_matches({{0.95, 0.9}, {0.92, 0.1}}, 0.9), 1u);
  EXPECT_EQ(greedy_matches({{0.95, 0.9}, {0.1, 0.92}}, 0.9), 2u);
  EXPECT_EQ(greedy_matches({{0.5}}, 0.9), 0u);
}

TEST(Classifiers, StrictAndBroadRefusal) {
  const auto pats = RefusalPatterns::load_default();
  EXPECT_TRUE(classify_refusal("  I DON'T HAVE SPECIFIC details.", pats, RefusalMode::Strict));
  EXPECT_TRUE(classify_refusal("I don’t have specific details.", pats, RefusalMode::Strict));
  EXPECT_FALSE(classify_refusal("She would stay. I don't have specific dates.", pats, RefusalMode::Strict));
  EXPECT_TRUE(classify_refusal("She would stay. I don't have specific dates.", pats, RefusalMode::Broad));
  EXPECT_FALSE(classify_refusal("She would stay on the river.", pats, RefusalMode::Broad));
  const std::vector<std::string> rs = {"I cannot predict that.", "She stays.", "Maybe; not enough information.", "She goes."};
  EXPECT_DOUBLE_EQ(hedging_rate(rs, pats, RefusalMode::Strict), 0.25);
  EXPECT_DOUBLE_EQ(hedging_rate(rs, pats, RefusalMode::Broad), 0.5);
}

TEST(Classifiers, LengthScoreMatchesNaivePearson) {
  std::vector<LengthScoreItem> items = {{"C5", "short", 1},    {"C5", "a bit longer", 2},
                                        {"C5", "ééé", 1.5}, {"C4a", "x", 3},
                                        {"C4a", "xx yy", 4},   {"C4a", "xxx yyy zzz", 4.5},
                                        {"C4a", "no", 2}};
  const auto r = length_score_correlation(items);
  EXPECT_NEAR(r.at("C5").value, oracle::pearson_naive({5, 12, 3}, {1, 2, 1.5}), 1e-12);
  EXPECT_NEAR(r.at("C4a").value, oracle::pearson_naive({1, 5, 11, 2}, {3, 4, 4.5, 2}), 1e-12);
  items.push_back({"C2a", "lonely", 3});
  EXPECT_EQ(code_of([&] { length_score_correlation(items); }), Errc::GroupTooSmall);
}

TEST(Aggregate, JudgeMeansFirstThenPanel) {
  ScoreCube c;
  c.panel.primary = {"a", "b"};
  c.set({"s", "C5", "Q1"}, "a", 1);
  c.set({"s", "C5", "Q2"}, "a", 3);
  c.set({"s", "C5", "Q1"}, "b", 5);
  c.set({"s", "C5", "Q2"}, "b", std::nullopt);
  c.set({"s", "C5", "Q3"}, "a", 5);
  c.set_tier("s", "Q3", Tier::Recall);
  c.set({"s", "C4a", "Q1"}, "a", 4);
  c.set({"t", "C5", "Q1"}, "a", 2);

  const auto means = aggregate(c);
  const auto* m = find_mean(means, "s", "C5");
  ASSERT_TRUE(m);
  EXPECT_DOUBLE_EQ(m->per_judge_means.at("a"), 2.0);
  EXPECT_DOUBLE_EQ(m->per_judge_means.at("b"), 5.0);
  EXPECT_DOUBLE_EQ(m->panel_mean, 3.5);
  EXPECT_EQ(m->n_questions, 2u);
  EXPECT_EQ(m->effective_panel, 2u);

  AggregateOptions all;
  all.tier.reset();
  EXPECT_EQ(find_mean(aggregate(c, all), "s", "C5")->n_questions, 3u);

  const auto d = delta(means, "C4a", "C5");
  ASSERT_EQ(d.pairs.size(), 1u);
  EXPECT_EQ(d.pairs[0].first, "s");
  EXPECT_DOUBLE_EQ(d.pairs[0].second, 0.5);
  EXPECT_EQ(d.omitted, (std::vector<std::string>{"t"}));

  const auto q = question_panel_means(c, "s", "C5");
  EXPECT_DOUBLE_EQ(q.at("Q1"), 3.0);
  EXPECT_DOUBLE_EQ(q.at("Q2"), 3.0);
  const auto paired = paired_question_means(c, "s", "C5", "C4a");
  ASSERT_EQ(paired.size(), 1u);
  EXPECT_DOUBLE_EQ(paired[0].first, 3.0);
  EXPECT_DOUBLE_EQ(paired[0].second, 4.0);

  ScoreCube empty_cell;
  empty_cell.panel.primary = {"a"};
  empty_cell.set({"s", "C5", "Q1"}, "a", std::nullopt);
  EXPECT_EQ(code_of([&] { aggregate(empty_cell); }), Errc::EmptyCell);
  EXPECT_EQ(code_of([] { aggregate(ScoreCube{}); }), Errc::EmptyCell);
}
