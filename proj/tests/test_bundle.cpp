#include <doctest.h>

#include <filesystem>

#include "sensecast/bundle.hpp"
#include "sensecast/errors.hpp"
#include "sensecast/rng.hpp"

using namespace sensecast;

namespace {

ModelBundle sample_network_bundle(bool attention) {
  ModelBundle b;
  b.type = attention ? ModelType::kGruAttention : ModelType::kGru;
  b.dt_s = 20.0;
  b.tau_s = 180.0;
  b.seed = 99;
  Rng rng(12);
  b.norm.mean.assign(kNumChannels, 0.0);
  b.norm.stddev.assign(kNumChannels, 1.0);
  for (auto& m : b.norm.mean) m = rng.normal();
  for (std::size_t ch = 0; ch < kNumChannels; ++ch) {
    const int comps = kChannels[ch].components;
    b.preprocess.clip[ch].lo.assign(comps, -1.5);
    b.preprocess.clip[ch].hi.assign(comps, 2.5);
  }
  b.preprocess.emg_reference = 31.25;
  b.train_players = {"a", "b"};
  b.val_players = {"c"};
  b.test_players = {"d"};
  GruAttentionConfig cfg;
  cfg.use_attention = attention;
  b.network = GruAttentionModel::init(cfg, rng);
  return b;
}

}  // namespace

TEST_CASE("network bundle round-trips bit-exactly") {
  for (bool attention : {true, false}) {
    const ModelBundle b = sample_network_bundle(attention);
    const std::string json = bundle_to_json(b);
    const ModelBundle back = bundle_from_json(json);
    CHECK(back.type == b.type);
    CHECK(back.dt_s == b.dt_s);
    CHECK(back.tau_s == b.tau_s);
    CHECK(back.seed == b.seed);
    REQUIRE(back.network.has_value());
    const Vec pa = b.network->flatten();
    const Vec pb = back.network->flatten();
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i] == pb[i]);
    for (std::size_t i = 0; i < kNumChannels; ++i) {
      CHECK(back.norm.mean[i] == b.norm.mean[i]);
      CHECK(back.preprocess.clip[i].lo == b.preprocess.clip[i].lo);
    }
    CHECK(back.train_players == b.train_players);
    // Serialize again: identical bytes.
    CHECK(bundle_to_json(back) == json);
  }
}

TEST_CASE("logistic bundle round-trips") {
  ModelBundle b = sample_network_bundle(true);
  b.type = ModelType::kLogistic;
  b.network.reset();
  LogisticModel lm(kNumChannels);
  Rng rng(5);
  for (auto& w : lm.w) w = rng.normal();
  lm.b = -0.75;
  b.logistic = lm;
  const ModelBundle back = bundle_from_json(bundle_to_json(b));
  REQUIRE(back.logistic.has_value());
  CHECK(back.logistic->b == lm.b);
  for (std::size_t i = 0; i < lm.w.size(); ++i) CHECK(back.logistic->w[i] == lm.w[i]);
}

TEST_CASE("runtime state survives the round trip") {
  ModelBundle b = sample_network_bundle(true);
  RuntimeState rs;
  rs.next_bin = 42;
  rs.hidden = {0.1, -0.2, 0.3, 0.4, -0.5, 0.6, 0.7, -0.8};
  b.runtime = rs;
  const ModelBundle back = bundle_from_json(bundle_to_json(b));
  REQUIRE(back.runtime.has_value());
  CHECK(back.runtime->next_bin == 42);
  for (std::size_t i = 0; i < rs.hidden.size(); ++i) CHECK(back.runtime->hidden[i] == rs.hidden[i]);
}

TEST_CASE("save and load through the filesystem") {
  const auto dir = std::filesystem::temp_directory_path() / "sensecast_bundle_test";
  std::filesystem::create_directories(dir);
  const ModelBundle b = sample_network_bundle(true);
  save_bundle(dir / "bundle.json", b);
  const ModelBundle back = load_bundle(dir / "bundle.json");
  CHECK(back.network->flatten() == b.network->flatten());
  std::filesystem::remove_all(dir);
}

TEST_CASE("malformed bundles are rejected") {
  CHECK_THROWS_AS(bundle_from_json("{not json"), StructuralError);
  CHECK_THROWS_AS(bundle_from_json("{}"), StructuralError);
  CHECK_THROWS_AS(model_type_from_name("mystery"), ConfigError);
}

TEST_CASE("baseline bundle has no parameters") {
  ModelBundle b = sample_network_bundle(true);
  b.type = ModelType::kBaseline;
  b.network.reset();
  const ModelBundle back = bundle_from_json(bundle_to_json(b));
  CHECK(back.type == ModelType::kBaseline);
  CHECK_FALSE(back.network.has_value());
  CHECK_FALSE(back.logistic.has_value());
}
