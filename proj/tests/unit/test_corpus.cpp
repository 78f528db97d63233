#include <gtest/gtest.h>

#include "repacc/corpus.hpp"
#include "repacc/error.hpp"
#include "repacc/text.hpp"
#include "test_util.hpp"

using namespace repacc;

namespace {

std::string chapters(int n, int words_each) {
  std::string out = "Front matter line\n\n";
  for (int c = 1; c <= n; ++c) {
    out += "CHAPTER " + std::to_string(c) + "\n\n";
    for (int w = 0; w < words_each; ++w) out += "w" + std::to_string(c) + "x" + std::to_string(w) + " ";
    out += "\n\n";
  }
  return out;
}

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return Errc::Io;
}

}  // namespace

TEST(Import, SplitsOnChapterMarkersAndDropsFrontMatter) {
  const auto c = import_corpus(chapters(4, 10), "s");
  ASSERT_EQ(c.chapters.size(), 4u);
  EXPECT_EQ(c.chapters[0].id, "ch01");
  EXPECT_EQ(c.chapters[3].id, "ch04");
  EXPECT_EQ(c.word_count, 4u * 12u);  // "CHAPTER n" heading kept in each chapter
  EXPECT_EQ(c.chapters[0].text.find("Front"), std::string::npos);
}

TEST(Import, StripsGutenbergBoilerplate) {
  const std::string raw = "header\n*** START OF THE BOOK ***\nCHAPTER I\nbody text here\n*** END OF THE BOOK ***\nlicense";
  const auto c = import_corpus(raw, "s");
  ASSERT_EQ(c.chapters.size(), 1u);
  EXPECT_EQ(c.chapters[0].text, "CHAPTER I\nbody text here");
}

TEST(Import, NormalizesLineEndingsAndBlankRuns) {
  EXPECT_EQ(normalize_text("a\r\nb\r\rc   d\n\n\n\ne", false), "a\nb\n\nc d\n\ne");
}

TEST(Import, Errors) {
  EXPECT_EQ(code_of([] { import_corpus("  \n ", "s"); }), Errc::EmptyCorpus);
  EXPECT_EQ(code_of([] { import_corpus("no markers at all", "s"); }), Errc::NoChapterBoundary);
  ImportOptions o;
  o.single_chapter_fallback = true;
  EXPECT_EQ(import_corpus("no markers at all", "s", o).chapters.size(), 1u);
}

TEST(Split, EqualChaptersSplitInHalf) {
  const auto c = import_corpus(chapters(6, 20), "s");
  const auto s = split_corpus(c, 0.5);
  EXPECT_EQ(s.training, (std::vector<std::string>{"ch01", "ch02", "ch03"}));
  EXPECT_EQ(s.heldout, (std::vector<std::string>{"ch04", "ch05", "ch06"}));
  EXPECT_DOUBLE_EQ(s.achieved_share, 0.5);
  EXPECT_EQ(s.split_digest, split_digest(s.training, s.heldout));
}

TEST(Split, PropertiesAcrossRatios) {
  Corpus c;
  c.subject_id = "s";
  const std::vector<int> sizes = {50, 10, 80, 5, 30, 60, 20, 45};
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    std::string t;
    for (int w = 0; w < sizes[i]; ++w) t += "w ";
    c.chapters.push_back({"ch" + std::to_string(i), t});
  }
  for (double r = 0.05; r < 0.96; r += 0.05) {
    const auto s = split_corpus(c, r);
    ASSERT_FALSE(s.training.empty());
    ASSERT_FALSE(s.heldout.empty());
    EXPECT_EQ(s.training.size() + s.heldout.size(), c.chapters.size());
    // Contiguous prefix / suffix in order.
    for (std::size_t i = 0; i < s.training.size(); ++i) EXPECT_EQ(s.training[i], c.chapters[i].id);
    // No other single cut is strictly closer to the target share.
    double total = 0, cum = 0, best = 1e9;
    for (int n : sizes) total += n;
    for (std::size_t k = 1; k < sizes.size(); ++k) {
      cum += sizes[k - 1];
      best = std::min(best, std::abs(cum / total - r));
    }
    EXPECT_LE(std::abs(s.achieved_share - r), best + 1e-12) << "ratio " << r;
  }
}

TEST(Split, RejectsDegenerateAndSingleChapter) {
  const auto c = import_corpus(chapters(3, 5), "s");
  EXPECT_EQ(code_of([&] { split_corpus(c, 0.0); }), Errc::InvalidArgument);
  EXPECT_EQ(code_of([&] { split_corpus(c, 1.5); }), Errc::InvalidArgument);
  SplitOptions allow;
  allow.allow_degenerate = true;
  EXPECT_TRUE(split_corpus(c, 1.0, allow).heldout.empty());
  const auto one = import_corpus(chapters(1, 5), "s");
  EXPECT_EQ(code_of([&] { split_corpus(one, 0.5); }), Errc::SingleChapterUnsplittable);
}

TEST(Split, TamperedDigestIsRejected) {
  const auto c = import_corpus(chapters(4, 5), "s");
  auto j = split_corpus(c).to_json();
  j["heldout"].push_back("ch01");
  EXPECT_EQ(code_of([&] { CorpusSplit::from_json(j); }), Errc::ChecksumMismatch);
}

TEST(Split, PartsPartitionTheCorpus) {
  const auto c = import_corpus(io::read_file(testutil::toy_dir() / "alder.txt"), "alder");
  const auto s = split_corpus(c);
  const auto tr = training_part(c, s), ho = heldout_part(c, s);
  EXPECT_EQ(tr.word_count + ho.word_count, c.word_count);
  EXPECT_EQ(tr.chapters.size() + ho.chapters.size(), c.chapters.size());
}

TEST(Leakage, FindsMaximalSharedRun) {
  const std::string held = "the old pilot kept her on anyway because the girl coiled lines faster";
  const auto r = leakage_scan({{"q1", "Why was she kept on anyway because the girl coiled lines quickly?"},
                               {"q2", "What did the pilot think of her?"}},
                              held, 7);
  ASSERT_EQ(r.leaking_question_ids, (std::vector<std::string>{"q1"}));
  ASSERT_EQ(r.matches.size(), 1u);
  EXPECT_EQ(r.matches[0].span_text, "on anyway because the girl coiled lines");
  EXPECT_EQ(r.matches[0].length, 7u);
}

TEST(Leakage, SixSharedTokensAreClean) {
  const auto r = leakage_scan({{"q", "alpha beta gamma delta epsilon zeta other"}},
                              "x alpha beta gamma delta epsilon zeta y", 7);
  EXPECT_TRUE(r.clean());
  EXPECT_EQ(code_of([] { leakage_scan({}, "x", 2); }), Errc::InvalidArgument);
}

TEST(Leakage, PunctuationAndCaseDoNotHideOverlap) {
  const auto r = leakage_scan({{"q", "He said: \"ALPHA, beta; gamma -- delta epsilon zeta eta!\""}},
                              "alpha beta gamma delta epsilon zeta eta", 7);
  EXPECT_FALSE(r.clean());
}
