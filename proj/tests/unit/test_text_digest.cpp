#include <gtest/gtest.h>

#include "repacc/digest.hpp"
#include "repacc/error.hpp"
#include "repacc/text.hpp"
#include "test_util.hpp"

using namespace repacc;

TEST(Digest, KnownVectors) {
  EXPECT_EQ(md5_hex(""), "d41d8cd98f00b204e9800998ecf8427e");
  EXPECT_EQ(md5_hex("abc"), "900150983cd24fb0d6963f7d28e17f72");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(digest_hex(DigestAlgo::Md5, "abc"), md5_hex("abc"));
  EXPECT_EQ(digest_from_name(digest_name(DigestAlgo::Sha256)), DigestAlgo::Sha256);
}

TEST(Digest, CanonicalJsonSortsKeysAndDropsWhitespace) {
  const auto a = nlohmann::json::parse(R"({"b": [1, 2], "a": {"y": 1, "x": "é"}})");
  const auto b = nlohmann::json::parse(R"({"a":{"x":"é","y":1},"b":[1,2]})");
  EXPECT_EQ(canonical_json(a), canonical_json(b));
  EXPECT_EQ(canonical_json(a), R"({"a":{"x":"é","y":1},"b":[1,2]})");
}

TEST(Text, NgramTokensStripPunctuationAndCase) {
  const auto t = text::ngram_tokens("“Well,” she said … it's DONE.");
  const std::vector<std::string> expected = {"well", "she", "said", "its", "done"};
  EXPECT_EQ(t, expected);
}

TEST(Text, Utf8PrefixCountsCodePoints) {
  const std::string s = "añb€c";
  EXPECT_EQ(text::utf8_length(s), 5u);
  EXPECT_EQ(text::utf8_prefix(s, 4), "añb€");
  EXPECT_EQ(text::utf8_prefix(s, 10), s);
}

TEST(Text, WordsAndLines) {
  EXPECT_EQ(text::word_count("  one two\tthree\nfour "), 4u);
  EXPECT_EQ(text::trim("  x  "), "x");
  EXPECT_TRUE(text::starts_with_ci("Hello world", "hello"));
  EXPECT_TRUE(text::contains_ci("Hello World", "O W"));
  EXPECT_EQ(text::join({"a", "b", "c"}, ", "), "a, b, c");
  EXPECT_EQ(text::replace_all("a-b-c", "-", "+"), "a+b+c");
}

TEST(Io, JsonRoundTripAndMissingFile) {
  testutil::TempDir dir("io");
  const auto p = dir.path() / "nested" / "x.json";
  io::write_json(p, {{"k", 1}});
  EXPECT_EQ(io::read_json(p).at("k"), 1);
  EXPECT_THROW(io::read_file(dir.path() / "absent"), Error);
}
