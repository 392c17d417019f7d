#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "nrfi/datagen.hpp"
#include "nrfi/error.hpp"
#include "test_support.hpp"

namespace nrfi {
namespace {

using testing::random_tree;
using testing::single_leaf;
using testing::stump;

FeatureStats unit_stats(std::size_t n, double lo = -3.0, double hi = 3.0) {
  FeatureStats s;
  s.min.assign(n, lo);
  s.max.assign(n, hi);
  s.mean.assign(n, 0.0);
  s.stddev.assign(n, 1.0);
  s.absmax.assign(n, std::max(std::abs(lo), std::abs(hi)));
  return s;
}

struct Teacher {
  Dataset train;
  FeatureStats stats;
  RandomForest forest;
};

Teacher blobs_teacher(std::uint64_t seed, int n_trees = 25) {
  Teacher t;
  t.train = make_synthetic(SyntheticKind::Blobs, 200, 2, 1.0, seed);
  t.stats = compute_feature_stats(t.train.features);
  t.forest = train_forest(t.train, n_trees, {}, seed);
  return t;
}

double population_std(const std::vector<double>& v) {
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

TEST(GenerationConfig, Validation) {
  GenerationConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.c_std = 0.5;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.p_zero = 1.5;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.fixed_w_path = 0.5;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.fixed_p_forest = -0.1;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(InitSample, DegenerateStdGivesMean) {
  FeatureStats s = unit_stats(3);
  s.stddev.assign(3, 0.0);
  s.mean = {0.5, -1.25, 2.0};
  GenerationConfig cfg;
  Rng rng(1);
  EXPECT_EQ(init_sample(s, cfg, rng), s.mean);
}

TEST(InitSample, PZeroOneGivesZeroVector) {
  GenerationConfig cfg;
  cfg.p_zero = 1.0;
  Rng rng(1);
  EXPECT_EQ(init_sample(unit_stats(5), cfg, rng), std::vector<double>(5, 0.0));
}

TEST(InitSample, ClippedGaussianSpreadMatchesMonteCarloOracle) {
  FeatureStats s = unit_stats(1, -2.0, 2.5);
  GenerationConfig cfg;
  cfg.c_std = 3.0;
  Rng rng(7);
  std::vector<double> draws;
  for (int i = 0; i < 10000; ++i) {
    const double v = init_sample(s, cfg, rng)[0];
    ASSERT_GE(v, -2.0);
    ASSERT_LE(v, 2.5);
    draws.push_back(v);
  }
  // oracle: independent engine, same clipped law, many more draws
  std::mt19937 oracle_engine(12345);
  std::normal_distribution<double> gauss(0.0, 3.0);
  std::vector<double> oracle;
  for (int i = 0; i < 200000; ++i) oracle.push_back(std::clamp(gauss(oracle_engine), -2.0, 2.5));
  const double expected = population_std(oracle);
  EXPECT_NEAR(population_std(draws), expected, 0.1 * expected);
}

TEST(GenerateFromTree, ZeroWeightBranchIsNeverChosen) {
  const auto tree = stump(0, 0.5, {1.0, 0.0}, {0.0, 1.0});
  const auto w = compute_class_weights(tree, 2);
  const auto stats = unit_stats(1);
  GenerationConfig cfg;
  Rng rng(3);
  for (int i = 0; i < 2000; ++i) {
    GenerationState state(init_sample(stats, cfg, rng), 0);
    generate_from_tree(tree, w, state, stats, 3.0, cfg, rng);
    EXPECT_EQ(argmax(predict_tree(tree, state.x)), 0);
  }
}

TEST(GenerateFromTree, EqualWeightsChooseLeftHalfTheTime) {
  const auto tree = stump(0, 0.0, {0.5, 0.5}, {0.5, 0.5});
  const auto w = compute_class_weights(tree, 2);
  const auto stats = unit_stats(1);
  GenerationConfig cfg;
  Rng rng(11);
  int left = 0;
  const int runs = 10000;
  std::vector<WalkStep> trace;
  for (int i = 0; i < runs; ++i) {
    trace.clear();
    GenerationState state({0.0}, 1);
    generate_from_tree(tree, w, state, stats, 1.0, cfg, rng, &trace);
    ASSERT_EQ(trace.size(), 1u);
    EXPECT_EQ(trace[0].p_left, 0.5);
    left += trace[0].went_left;
  }
  EXPECT_NEAR(static_cast<double>(left) / runs, 0.5, 0.03);
}

TEST(GenerateFromTree, HugePathWeightKeepsCurrentRoute) {
  const auto tree = stump(0, 0.0, {0.5, 0.5}, {0.5, 0.5});
  const auto w = compute_class_weights(tree, 2);
  const auto stats = unit_stats(1);
  GenerationConfig cfg;
  Rng rng(5);
  for (double start : {0.9, -0.9}) {
    for (int i = 0; i < 1000; ++i) {
      GenerationState state({start}, 0);
      state.used_features[0] = true;
      std::vector<WalkStep> trace;
      generate_from_tree(tree, w, state, stats, 1e12, cfg, rng, &trace);
      EXPECT_EQ(state.x[0], start);
      EXPECT_FALSE(trace[0].corrected);
    }
  }
}

TEST(GenerateFromTree, DegenerateUniformIntervals) {
  // threshold outside the feature range forces the documented fallback values
  FeatureStats stats = unit_stats(1, 0.0, 1.0);
  GenerationConfig cfg;
  Rng rng(1);
  const auto left_tree = stump(0, -5.0, {1.0, 0.0}, {0.0, 1.0});
  const auto lw = compute_class_weights(left_tree, 2);
  GenerationState a({0.5}, 0);
  a.used_features[0] = true;
  generate_from_tree(left_tree, lw, a, stats, 1.0, cfg, rng);
  EXPECT_LT(a.x[0], -5.0);
  EXPECT_NEAR(a.x[0], -5.0, 1e-8);

  const auto right_tree = stump(0, 7.0, {1.0, 0.0}, {0.0, 1.0});
  const auto rw = compute_class_weights(right_tree, 2);
  GenerationState b({0.5}, 1);
  b.used_features[0] = true;
  generate_from_tree(right_tree, rw, b, stats, 1.0, cfg, rng);
  EXPECT_EQ(b.x[0], 7.0);
}

// Property over random one-hot trees: zero-weight children are never taken,
// and the final sample follows every choice whose feature was not rewritten later.
TEST(GenerateFromTree, WalkInvariants) {
  Rng rng(2024);
  const auto stats = unit_stats(3);
  GenerationConfig cfg;
  for (int trial = 0; trial < 500; ++trial) {
    auto tree = random_tree(rng, 3, 3, 5);
    std::vector<TreeNode> nodes = tree.nodes();
    for (auto& n : nodes)
      if (auto* leaf = std::get_if<LeafNode>(&n)) {
        std::fill(leaf->probs.begin(), leaf->probs.end(), 0.0);
        leaf->probs[rng.index(3)] = 1.0;
      }
    tree = DecisionTree(std::move(nodes), tree.root());
    const auto w = compute_class_weights(tree, 3);
    const int target = static_cast<int>(rng.index(3));
    GenerationState state(init_sample(stats, cfg, rng), target);
    if (trial % 2) std::fill(state.used_features.begin(), state.used_features.end(), true);
    std::vector<WalkStep> trace;
    const auto leaf = generate_from_tree(tree, w, state, stats, 1.0 + rng.uniform() * 5.0, cfg, rng, &trace);
    EXPECT_TRUE(tree.is_leaf(leaf));
    for (std::size_t i = 0; i < trace.size(); ++i) {
      const auto& step = trace[i];
      const auto& s = tree.split(step.node);
      const double wl = w.at(s.left)[static_cast<std::size_t>(target)];
      const double wr = w.at(s.right)[static_cast<std::size_t>(target)];
      if (wl == 0.0 && wr > 0.0) EXPECT_FALSE(step.went_left);
      if (wr == 0.0 && wl > 0.0) EXPECT_TRUE(step.went_left);
      const bool rewritten = std::any_of(trace.begin() + static_cast<std::ptrdiff_t>(i) + 1, trace.end(),
                                         [&](const WalkStep& later) { return later.feature == step.feature && later.corrected; });
      if (!rewritten) EXPECT_EQ(state.x[static_cast<std::size_t>(step.feature)] < step.threshold, step.went_left);
    }
    for (std::size_t c = 0; c < 3; ++c)
      if (std::any_of(trace.begin(), trace.end(), [&](const WalkStep& s) { return s.feature == static_cast<int>(c); }))
        EXPECT_TRUE(state.used_features[c]);
  }
}

TEST(GenerateFromTree, WrittenValuesStayInDocumentedBounds) {
  const auto t = blobs_teacher(4);
  GenerationConfig cfg;
  const ForestSampler sampler(t.forest, t.stats, cfg);
  for (int k = 0; k < 300; ++k) {
    Rng rng(derive_seed(77, static_cast<std::uint64_t>(k)));
    GenerationState state(init_sample(t.stats, cfg, rng), k % 2);
    for (std::size_t tree = 0; tree < t.forest.tree_count(); ++tree) {
      std::vector<WalkStep> trace;
      generate_from_tree(t.forest.trees()[tree], sampler.class_weights()[tree], state, t.stats, 3.0, cfg, rng, &trace);
      for (const auto& step : trace) {
        const auto f = static_cast<std::size_t>(step.feature);
        const double lo = std::min(t.stats.min[f], step.threshold - kThresholdDrawTail * t.stats.stddev[f]);
        const double hi = std::max(t.stats.max[f], step.threshold + kThresholdDrawTail * t.stats.stddev[f]);
        EXPECT_GE(step.value_after, lo);
        EXPECT_LE(step.value_after, hi);
        if (step.corrected) {
          EXPECT_GE(step.value_after, t.stats.min[f]);
          EXPECT_LE(step.value_after, t.stats.max[f]);
        }
      }
    }
  }
}

TEST(SubsetSize, Bounds) {
  EXPECT_EQ(subset_size(25, 1e-9, true), 1u);
  EXPECT_EQ(subset_size(25, 0.0, true), 1u);
  EXPECT_EQ(subset_size(25, 1.0, true), 25u);
  EXPECT_EQ(subset_size(25, 0.5, true), 13u);
  EXPECT_EQ(subset_size(25, 0.01, false), 25u);
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const auto n = 1 + rng.index(100);
    const auto k = subset_size(n, rng.uniform(), true);
    EXPECT_GE(k, 1u);
    EXPECT_LE(k, n);
  }
}

TEST(GenerateFromForest, PureStumpAlwaysHitsTarget) {
  const RandomForest rf({stump(0, 0.0, {1.0, 0.0}, {0.0, 1.0})}, 1, 2);
  GenerationConfig cfg;
  cfg.use_dts = false;
  Rng rng(8);
  for (int i = 0; i < 500; ++i) {
    const int t = i % 2;
    const auto s = generate_from_forest(rf, t, unit_stats(1), cfg, rng);
    EXPECT_EQ(argmax(s.y), t);
    EXPECT_EQ(s.trees_used, 1u);
  }
}

TEST(GenerateFromForest, TinySubsetUsesOneTree) {
  const auto t = blobs_teacher(1);
  GenerationConfig cfg;
  cfg.fixed_p_forest = 1e-6;
  Rng rng(1);
  EXPECT_EQ(generate_from_forest(t.forest, 0, t.stats, cfg, rng).trees_used, 1u);
  cfg.fixed_p_forest = 1.0;
  EXPECT_EQ(generate_from_forest(t.forest, 0, t.stats, cfg, rng).trees_used, 25u);
}

TEST(GenerateFromForest, MostSamplesMatchTheTarget) {
  const auto t = blobs_teacher(3);
  const ForestSampler sampler(t.forest, t.stats, GenerationConfig{});
  int hits = 0;
  for (std::uint64_t k = 0; k < 1000; ++k) {
    const auto s = sampler.at(k);
    hits += argmax(s.y) == s.target;
  }
  EXPECT_GT(hits / 1000.0, 0.5);
}

TEST(GenerateFromForest, UnitPathWeightIsBitIdenticalToNoPathWeighting) {
  const auto t = blobs_teacher(6);
  for (bool dts : {false, true}) {
    GenerationConfig rdg;
    rdg.use_pw = false;
    rdg.use_dts = dts;
    rdg.seed = 31;
    GenerationConfig pw = rdg;
    pw.use_pw = true;
    pw.fixed_w_path = 1.0;
    const ForestSampler a(t.forest, t.stats, rdg);
    const ForestSampler b(t.forest, t.stats, pw);
    for (std::uint64_t k = 0; k < 500; ++k) {
      const auto sa = a.at(k);
      const auto sb = b.at(k);
      ASSERT_EQ(sa.x, sb.x);
      ASSERT_EQ(sa.y, sb.y);
    }
  }
}

TEST(SampleStream, DeterministicAndRoundRobin) {
  const auto t = blobs_teacher(2);
  GenerationConfig cfg;
  cfg.seed = 99;
  const ForestSampler a(t.forest, t.stats, cfg);
  const ForestSampler b(t.forest, t.stats, cfg);
  for (std::uint64_t k = 0; k < 100; ++k) {
    const auto sa = a.at(k);
    const auto sb = b.at(k);
    EXPECT_EQ(sa.x, sb.x);
    EXPECT_EQ(sa.y, sb.y);
  }
  std::vector<int> seen(2, 0);
  for (std::uint64_t k = 0; k < 4; ++k) ++seen[static_cast<std::size_t>(a.at(k).target)];
  EXPECT_EQ(seen, (std::vector<int>{2, 2}));
  // position-addressable: fill() agrees with at()
  RowMatrix x, y;
  a.fill(10, 5, x, y);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(x(i, 0), a.at(10 + static_cast<std::uint64_t>(i)).x[0]);
}

TEST(SampleStream, ArgmaxClassesAreBalanced) {
  const auto t = blobs_teacher(5);
  const ForestSampler sampler(t.forest, t.stats, GenerationConfig{});
  int zeros = 0;
  for (std::uint64_t k = 0; k < 1000; ++k) zeros += argmax(sampler.at(k).y) == 0;
  EXPECT_NEAR(zeros / 1000.0, 0.5, 0.1);
}

TEST(ConfidenceDistribution, CountsAndPureTeacher) {
  const auto t = blobs_teacher(7);
  const auto h = confidence_distribution(t.forest, t.stats, GenerationConfig{}, 1000, 20);
  EXPECT_EQ(std::accumulate(h.counts.begin(), h.counts.end(), std::size_t{0}), 1000u);
  EXPECT_THROW(confidence_distribution(t.forest, t.stats, GenerationConfig{}, 0, 20), Error);
  EXPECT_THROW(confidence_distribution(t.forest, t.stats, GenerationConfig{}, 10, 1), Error);

  const RandomForest pure({stump(0, 0.0, {1.0, 0.0}, {0.0, 1.0}), stump(0, 0.0, {1.0, 0.0}, {0.0, 1.0})}, 1, 2);
  GenerationConfig cfg;
  cfg.use_dts = false;
  const auto p = confidence_distribution(pure, unit_stats(1), cfg, 200, 10);
  for (double c : p.confidences) EXPECT_EQ(c, 1.0);
  EXPECT_EQ(p.counts.back(), 200u);
}

}  // namespace
}  // namespace nrfi
