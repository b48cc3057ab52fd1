#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "oscar/backend/backend.hpp"
#include "oscar/backend/wire.hpp"
#include "oscar/core/digest.hpp"
#include "oscar/core/errors.hpp"
#include "support.hpp"

namespace oscar::backend {
namespace {

TEST(Renormalize, SymmetricPair) {
  const auto p = renormalize_logprobs({-1.0, -1.0});
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  EXPECT_DOUBLE_EQ(p[1], 0.5);
}

TEST(Renormalize, InfiniteEntriesGetZero) {
  const auto p = renormalize_logprobs({-INFINITY, std::log(0.2)});
  EXPECT_EQ(p[0], 0.0);
  EXPECT_DOUBLE_EQ(p[1], 1.0);
  EXPECT_THROW(renormalize_logprobs({-INFINITY, -INFINITY}), ArgumentError);
}

TEST(Renormalize, AlwaysADistribution) {
  Rng rng(5);
  for (int i = 0; i < 500; ++i) {
    std::vector<double> lp;
    const auto n = rng.uniform_int(2, 6);
    for (std::int64_t k = 0; k < n; ++k) lp.push_back(-rng.uniform() * 800.0);
    const auto p = renormalize_logprobs(lp);
    double total = 0;
    for (double x : p) {
      ASSERT_GE(x, 0.0);
      ASSERT_LE(x, 1.0);
      total += x;
    }
    ASSERT_NEAR(total, 1.0, 1e-6);
  }
}

TEST(QualityScore, FirstNumberRule) {
  EXPECT_DOUBLE_EQ(parse_quality_score("8"), 8.0);
  EXPECT_DOUBLE_EQ(parse_quality_score("Score: 7.5/10 because it is fluent"), 7.5);
  EXPECT_DOUBLE_EQ(parse_quality_score("12"), 10.0);
  EXPECT_THROW(parse_quality_score("excellent"), ScoringError);
}

TEST(MatchChoice, LabelsAndWords) {
  const std::vector<std::string> yn = {"Yes", "No"};
  EXPECT_EQ(match_choice("No", yn), 1);
  EXPECT_EQ(match_choice(" yes ", yn), 0);
  EXPECT_EQ(match_choice("(B)", yn), 1);
  EXPECT_EQ(match_choice("A", yn), 0);
  EXPECT_EQ(match_choice("(B) No", yn), 1);
  EXPECT_EQ(match_choice("No, there is not.", yn), 1);
  EXPECT_EQ(match_choice("perhaps", yn), -1);
}

TEST(VoteProbability, SharesOfMatchedSamples) {
  const std::vector<std::string> yn = {"Yes", "No"};
  const auto p = vote_probability({"No", "no", "Yes", "(B)", "unclear"}, yn);
  EXPECT_DOUBLE_EQ(p[0], 0.25);
  EXPECT_DOUBLE_EQ(p[1], 0.75);
  const auto u = vote_probability({"hmm"}, yn);
  EXPECT_DOUBLE_EQ(u[0], 0.5);
}

TEST(ChoiceQuery, Validation) {
  ChoiceQuery q{"img", "p", {"Yes"}};
  EXPECT_THROW(q.validate(), ArgumentError);
  q.choices = {"Yes", "Yes"};
  EXPECT_THROW(q.validate(), ArgumentError);
  q.choices = {"Yes", "No"};
  EXPECT_NO_THROW(q.validate());
}

TEST(Wire, RequestFieldsExactly) {
  GenerationRequest r;
  r.model = "m";
  r.prompt = "p";
  r.image = "sim://scene/1";
  const auto j = to_json(r);
  std::set<std::string> keys;
  for (const auto& [k, v] : j.items()) keys.insert(k);
  EXPECT_EQ(keys, (std::set<std::string>{"model", "prompt", "image", "n", "temperature",
                                         "max_tokens", "logprobs"}));
  EXPECT_EQ(parse_request(encode(r)), r);
}

TEST(Wire, StrictDecoding) {
  EXPECT_THROW(parse_request("[1,2]"), ProtocolError);
  EXPECT_THROW(parse_request(R"({"model":"m"})"), ProtocolError);
  EXPECT_THROW(
      parse_request(R"({"image":"i","logprobs":true,"max_tokens":4,"model":"m","n":1,)"
                    R"("prompt":"p","temperature":1.0,"extra":1})"),
      ProtocolError);
  EXPECT_THROW(parse_response("not json"), ProtocolError);
  EXPECT_THROW(parse_response(R"({"candidates":[{"text":"a","logprob":0.5,"tokens":1}]})"),
               ProtocolError);
  try {
    parse_response("garbage");
    FAIL();
  } catch (const ProtocolError& e) {
    EXPECT_EQ(e.raw_payload(), "garbage");
  }
}

TEST(Wire, NullLogprobIsAbsent) {
  const auto r =
      parse_response(R"({"candidates":[{"logprob":null,"text":"Hi.","tokens":1}],"model":"x"})");
  ASSERT_EQ(r.candidates.size(), 1u);
  EXPECT_FALSE(r.candidates[0].logprob.has_value());
  EXPECT_EQ(r.model_id, "x");
}

TEST(Wire, FixtureCorpusRoundTripsByteExactly) {
  const auto dir = testing::fixture_path("protocol");
  int requests = 0, responses = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    const std::string bytes = read_file(entry.path());
    if (name.find("_request.json") != std::string::npos) {
      EXPECT_EQ(encode(parse_request(bytes)), bytes) << name;
      ++requests;
    } else if (name.find("_response.json") != std::string::npos) {
      EXPECT_EQ(encode(parse_response(bytes)), bytes) << name;
      ++responses;
    }
  }
  EXPECT_GE(requests, 5);
  EXPECT_EQ(requests, responses);
}

TEST(Wire, PromptHelpers) {
  const auto p = generation_prompt("Describe.", "A cat.");
  EXPECT_EQ(p, "Describe.\n\nA cat.");
  EXPECT_EQ(split_generation_prompt(p), (std::pair<std::string, std::string>{"Describe.", "A cat."}));
  EXPECT_EQ(split_generation_prompt("Describe.").second, "");
  const auto q = quality_prompt("A dog runs.");
  EXPECT_EQ(quality_prompt_caption(q), std::optional<std::string>("A dog runs."));
  EXPECT_FALSE(quality_prompt_caption("Describe.").has_value());
  EXPECT_EQ(strip_image_marker("<image>  Hello"), "Hello");
}

}  // namespace
}  // namespace oscar::backend
