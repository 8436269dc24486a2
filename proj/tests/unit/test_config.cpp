#include "doctest.h"
#include "rdrn/config.hpp"
#include "rdrn/error.hpp"

using namespace rdrn;

TEST_CASE("key-value parsing") {
  const KeyValues kv = parse_key_values(
      "# comment\n"
      "depth = 3   # trailing\n"
      "\n"
      "nlsa-levels=2..3\n"
      "  channels =16\n");
  CHECK(kv.at("depth") == "3");
  CHECK(kv.at("nlsa_levels") == "2..3");
  CHECK(kv.at("channels") == "16");
  CHECK_THROWS_AS(parse_key_values("depth 3\n"), ConfigError);
}

TEST_CASE("integer sets") {
  CHECK(parse_int_set("3,4, 5") == std::set<int>{3, 4, 5});
  CHECK(parse_int_set("3..5") == std::set<int>{3, 4, 5});
  CHECK(parse_int_set("none").empty());
  CHECK(parse_int_set("").empty());
  CHECK(format_int_set({1, 2}) == "1,2");
  CHECK(format_int_set({}) == "none");
  CHECK_THROWS_AS(parse_int_set("a,b"), ConfigError);
}

TEST_CASE("configs round-trip through key-value text") {
  RdrnConfig m;
  m.depth = 2;
  m.channels = 16;
  m.scale = 8;
  m.cascade_x8 = true;
  m.nlsa_levels = {};
  m.negative_slope = 0.1f;
  CHECK(model_config_from(parse_key_values(format_key_values(to_key_values(m)))) == m);

  TrainConfig t;
  t.stage = Stage::L2Finetune;
  t.learning_rate = 1e-4f;
  t.augment = false;
  t.is_weights = "uniform";
  CHECK(train_config_from(parse_key_values(format_key_values(to_key_values(t)))) == t);

  DegradationSpec d = DegradationSpec::bd_default(3);
  d.blur_sigma = 1.2;
  const DegradationSpec back = degradation_from(to_key_values(d));
  CHECK(back.canonical() == d.canonical());
}

TEST_CASE("malformed values are configuration errors") {
  CHECK_THROWS_AS(model_config_from({{"depth", "three"}}), ConfigError);
  CHECK_THROWS_AS(model_config_from({{"scale", "5"}}), ConfigError);
  CHECK_THROWS_AS(train_config_from({{"augment", "maybe"}}), ConfigError);
  CHECK_THROWS_AS(train_config_from({{"learning_rate", "-1"}}), ConfigError);
  CHECK_THROWS_AS(degradation_from({{"degradation", "XY"}}), ConfigError);
}
