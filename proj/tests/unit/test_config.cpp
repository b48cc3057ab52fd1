#include <gtest/gtest.h>

#include "oscar/core/config.hpp"
#include "oscar/core/errors.hpp"
#include "oscar/core/types.hpp"

namespace oscar {
namespace {

TEST(SearchConfig, DefaultsAreValid) {
  SearchConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_DOUBLE_EQ(c.length_penalty, 1.25);
  EXPECT_DOUBLE_EQ(c.q_margin, 0.05);
  EXPECT_EQ(c.expansion_width, 4);
  EXPECT_DOUBLE_EQ(c.discount, 1.0);
}

TEST(SearchConfig, RejectsOutOfBounds) {
  auto bad = [](auto mutate) {
    SearchConfig c;
    mutate(c);
    EXPECT_THROW(c.validate(), ConfigError);
  };
  bad([](SearchConfig& c) { c.c_puct = 0; });
  bad([](SearchConfig& c) { c.length_penalty = -1; });
  bad([](SearchConfig& c) { c.discount = 1.5; });
  bad([](SearchConfig& c) { c.expansion_width = 0; });
  bad([](SearchConfig& c) { c.sim_threshold = 1.1; });
  bad([](SearchConfig& c) { c.budget = 0; });
  bad([](SearchConfig& c) { c.max_depth = 0; });
  bad([](SearchConfig& c) { c.temperature = 0; });
  bad([](SearchConfig& c) { c.q_margin = -0.01; });
}

TEST(KeyValueConfig, ParsesFieldNames) {
  auto kv = KeyValueConfig::parse(
      "# comment\n\nc_puct = 2.5\nlength_penalty=1.0\n budget = 10 \npath_score = leaf\n"
      "seed = 18446744073709551615\n");
  SearchConfig c;
  take_search_config(kv, c);
  EXPECT_TRUE(kv.values().empty());
  EXPECT_DOUBLE_EQ(c.c_puct, 2.5);
  EXPECT_DOUBLE_EQ(c.length_penalty, 1.0);
  EXPECT_EQ(c.budget, 10);
  EXPECT_EQ(c.path_score, PathScore::leaf);
  EXPECT_EQ(c.seed, 18446744073709551615ULL);
}

TEST(KeyValueConfig, LeavesUnknownKeys) {
  auto kv = KeyValueConfig::parse("budget = 3\nmystery = 1\n");
  SearchConfig c;
  take_search_config(kv, c);
  EXPECT_EQ(kv.values().size(), 1u);
  EXPECT_TRUE(kv.contains("mystery"));
}

TEST(KeyValueConfig, Errors) {
  EXPECT_THROW(KeyValueConfig::parse("no equals sign"), ConfigError);
  EXPECT_THROW(KeyValueConfig::parse("= 3"), ConfigError);
  EXPECT_THROW(parse_double("k", "1.5x"), ConfigError);
  EXPECT_THROW(parse_int("k", "2.5"), ConfigError);
  EXPECT_THROW(parse_uint64("k", "-1"), ConfigError);
  EXPECT_THROW(parse_bool("k", "maybe"), ConfigError);
  EXPECT_TRUE(parse_bool("k", "true"));
  EXPECT_FALSE(parse_bool("k", "0"));
}

TEST(KeyValueConfig, EntriesRoundTrip) {
  SearchConfig c;
  c.c_puct = 1.75;
  c.seed = 99;
  c.path_score = PathScore::mean;
  KeyValueConfig kv;
  for (const auto& [k, v] : search_config_entries(c)) kv.set(k, v);
  auto reparsed = KeyValueConfig::parse(kv.to_text());
  SearchConfig back;
  take_search_config(reparsed, back);
  EXPECT_EQ(back, c);
}

TEST(PathScore, Names) {
  for (auto p : {PathScore::sum, PathScore::leaf, PathScore::mean}) {
    EXPECT_EQ(path_score_from_string(to_string(p)), p);
  }
  EXPECT_THROW(path_score_from_string("median"), Error);
}

}  // namespace
}  // namespace oscar
