#include <fstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "nrfi/error.hpp"
#include "nrfi/run_config.hpp"
#include "test_support.hpp"

namespace nrfi {
namespace {

RunConfig customised() {
  RunConfig cfg;
  cfg.seed = 1234;
  cfg.output_dir = "runs/a";
  cfg.data.synthetic = "two_moons";
  cfg.data.noise = 0.15;
  cfg.n_limit = 20;
  cfg.n_trees = 7;
  cfg.tree.max_depth = 9;
  cfg.tree.max_features = MaxFeatures::exactly(2);
  cfg.tree.bootstrap = false;
  cfg.generation.use_pw = false;
  cfg.generation.fixed_p_forest = 0.25;
  cfg.generation.c_std = 2.5;
  cfg.training.learning_rate = 0.005;
  cfg.training.epochs = 3;
  cfg.hidden = {16};
  cfg.compare_hidden = {{4}, {16, 16}};
  cfg.imitation.hard_labels = true;
  cfg.map_activation = Activation::Sigmoid;
  cfg.map_beta = 50.0;
  cfg.resolve_seeds();
  return cfg;
}

TEST(RunConfig, RoundTripIsLossless) {
  const auto cfg = customised();
  const auto j = to_json(cfg);
  const auto back = run_config_from_json(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(to_json(back), j);
  EXPECT_EQ(back.n_limit, 20);
  EXPECT_EQ(back.tree.max_features.kind, MaxFeatures::Kind::Count);
  EXPECT_EQ(back.generation.fixed_p_forest, 0.25);
  EXPECT_EQ(back.map_activation, Activation::Sigmoid);
}

TEST(RunConfig, DefaultsRoundTrip) {
  const RunConfig cfg;
  EXPECT_EQ(to_json(run_config_from_json(to_json(cfg))), to_json(cfg));
  // a partial document keeps defaults for the rest
  const auto partial = run_config_from_json(nlohmann::json{{"n_trees", 3}});
  EXPECT_EQ(partial.n_trees, 3);
  EXPECT_EQ(partial.hidden, (std::vector<int>{32, 32}));
}

TEST(RunConfig, HashIsStableAndSensitive) {
  const auto a = to_json(customised());
  EXPECT_EQ(config_hash(a), config_hash(to_json(customised())));
  EXPECT_EQ(config_hash(a).size(), 16u);
  auto b = customised();
  b.n_trees += 1;
  EXPECT_NE(config_hash(to_json(b)), config_hash(a));
  // FNV-1a 64 of "null"
  EXPECT_EQ(config_hash(nlohmann::json()), "5b9bc4ba528108e4");
}

TEST(RunConfig, SeedsDeriveFromRunSeed) {
  RunConfig a, b;
  a.seed = 5;
  b.seed = 6;
  a.resolve_seeds();
  b.resolve_seeds();
  EXPECT_NE(a.generation.seed, b.generation.seed);
  EXPECT_NE(a.training.seed, a.generation.seed);
  EXPECT_NE(a.forest_seed(), a.split_seed());
  EXPECT_EQ(a.forest_seed(), derive_seed(5, 4));
}

TEST(RunConfig, FileErrors) {
  const auto dir = testing::temp_dir("run_config");
  EXPECT_THROW(load_run_config(dir / "missing.json"), Error);
  std::ofstream(dir / "bad.json") << "{\"n_trees\": ";
  EXPECT_THROW(load_run_config(dir / "bad.json"), FormatError);
  std::ofstream(dir / "wrong.json") << "{\"split\": [0.5, 0.5]}";
  EXPECT_THROW(load_run_config(dir / "wrong.json"), FormatError);
  std::ofstream(dir / "ok.json") << to_json(customised()).dump(2);
  EXPECT_EQ(to_json(load_run_config(dir / "ok.json")), to_json(customised()));
}

TEST(HiddenSizes, ParseAndFormat) {
  EXPECT_EQ(parse_hidden_sizes("32,32"), (std::vector<int>{32, 32}));
  EXPECT_EQ(parse_hidden_sizes(""), std::vector<int>{});
  EXPECT_EQ(format_hidden_sizes({8, 16}), "8,16");
  EXPECT_THROW(parse_hidden_sizes("8,x"), Error);
  EXPECT_THROW(parse_hidden_sizes("0"), Error);
}

}  // namespace
}  // namespace nrfi
