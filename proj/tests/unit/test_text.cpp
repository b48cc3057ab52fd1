#include <gtest/gtest.h>

#include <set>

#include "oscar/core/digest.hpp"
#include "oscar/core/rng.hpp"
#include "oscar/core/text.hpp"
#include "support.hpp"

namespace oscar {
namespace {

std::vector<std::string> texts(const std::vector<Sentence>& s) {
  std::vector<std::string> out;
  for (const auto& x : s) out.push_back(x.text);
  return out;
}

TEST(SplitSentences, TwoClauses) {
  EXPECT_EQ(texts(split_sentences("A cat sits. A dog runs.")),
            (std::vector<std::string>{"A cat sits.", "A dog runs."}));
}

TEST(SplitSentences, EmptyInput) { EXPECT_TRUE(split_sentences("").empty()); }

TEST(SplitSentences, AbbreviationProtected) {
  EXPECT_EQ(split_sentence_texts("Approx. 3 dogs run! Really?"),
            (std::vector<std::string>{"Approx. 3 dogs run!", "Really?"}));
}

TEST(SplitSentences, CustomAbbreviationList) {
  const std::set<std::string> none;
  EXPECT_EQ(split_sentence_texts("Approx. 3 dogs run!", none),
            (std::vector<std::string>{"Approx.", "3 dogs run!"}));
}

TEST(SplitSentences, HandLabeledFixture) {
  const auto cases = testing::read_jsonl(testing::fixture_path("sentences.jsonl"));
  ASSERT_EQ(cases.size(), 50u);
  for (const auto& c : cases) {
    const auto expected = c.at("sentences").get<std::vector<std::string>>();
    EXPECT_EQ(split_sentence_texts(c.at("text").get<std::string>()), expected)
        << "input: " << c.at("text");
  }
}

TEST(SplitSentences, TokenCountsAreWhitespaceTokens) {
  const auto s = split_sentences("One two three. Four!");
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].token_count, 3);
  EXPECT_EQ(s[1].token_count, 1);
}

TEST(SplitSentences, RoundTripOnDelimitedText) {
  Rng rng(11);
  const std::vector<std::string> words = {"cat", "the", "on", "a", "Dog", "3.5", "sofa", "red"};
  const std::vector<std::string> ends = {".", "!", "?", "?!", "..."};
  for (int trial = 0; trial < 300; ++trial) {
    std::string text;
    const auto n = rng.uniform_int(1, 5);
    for (std::int64_t s = 0; s < n; ++s) {
      const auto w = rng.uniform_int(1, 6);
      std::string sentence;
      for (std::int64_t i = 0; i < w; ++i) {
        sentence += (i ? std::string(rng.bernoulli(0.2) ? "  " : " ") : std::string()) +
                    words[static_cast<std::size_t>(rng.uniform_int(0, 7))];
      }
      sentence += ends[static_cast<std::size_t>(rng.uniform_int(0, 4))];
      text += (s ? (rng.bernoulli(0.3) ? "\n " : " ") : "") + sentence;
    }
    const auto parts = split_sentences(text);
    EXPECT_EQ(normalize_whitespace(join_sentences(parts)), normalize_whitespace(text)) << text;
    for (const auto& p : parts) {
      ASSERT_FALSE(p.text.empty());
      EXPECT_TRUE(is_sentence_delimiter(p.text.back())) << p.text;
    }
  }
}

TEST(Text, HelpersBehave) {
  EXPECT_EQ(normalize_whitespace("  a \t b\n\nc  "), "a b c");
  EXPECT_EQ(trim("  x y "), "x y");
  EXPECT_EQ(to_lower("AbC"), "abc");
  EXPECT_EQ(whitespace_token_count(" a  b c "), 3);
  EXPECT_EQ(word_tokens("It's a Red-cat, 2 dogs."),
            (std::vector<std::string>{"it's", "a", "red", "cat", "2", "dogs"}));
  EXPECT_EQ(append_sentence("", "A."), "A.");
  EXPECT_EQ(append_sentence("A.", "B."), "A. B.");
  EXPECT_EQ(join_texts({"A.", "", "B."}), "A. B.");
}

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(a.next(), b.next());
}

TEST(Rng, DerivedSeedsDiffer) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(derive_seed(7, {i, 3}));
  EXPECT_EQ(seen.size(), 1000u);
  EXPECT_EQ(derive_seed(7, {1, 2}), derive_seed(7, {1, 2}));
  EXPECT_NE(derive_seed(7, {1, 2}), derive_seed(7, {2, 1}));
}

TEST(Rng, KnownFnvValues) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(Rng, UniformOpenStaysInside) {
  Rng r(3);
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform_open();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Digest, Sha256AndBase64) {
  EXPECT_EQ(sha256_hex("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(base64_encode("hello"), "aGVsbG8=");
  EXPECT_EQ(base64_encode(""), "");
}

}  // namespace
}  // namespace oscar
