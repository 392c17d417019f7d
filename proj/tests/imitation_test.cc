#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "nrfi/error.hpp"
#include "nrfi/feature_stats.hpp"
#include "nrfi/imitation.hpp"
#include "test_support.hpp"

namespace nrfi {
namespace {

FeatureStats stats_of(const Dataset& ds) { return compute_feature_stats(ds.features); }

TrainConfig short_training(int epochs, int steps = 20) {
  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.steps_per_epoch = steps;
  cfg.seed = 3;
  return cfg;
}

TEST(Imitate, ConstantTeacherIsLearned) {
  const RandomForest rf({testing::single_leaf({0.3, 0.7})}, 2, 2);
  const auto ds = make_synthetic(SyntheticKind::Blobs, 100, 2, 1.0, 1);
  const auto stats = stats_of(ds);
  GenerationConfig gen;
  gen.seed = 5;
  ImitationOptions opts;
  opts.pool_size = 200;
  opts.probe_size = 100;
  const auto result = imitate(rf, stats, std::vector<int>{8, 8}, gen, short_training(10, 100), opts);
  // checked where the generator puts its inputs
  const auto probe = normalize_rows(make_probe_set(stats, gen, 500, 1), stats);
  const auto p = forward_batch(result.student, probe);
  EXPECT_NEAR(p.col(0).mean(), 0.3, 0.01);
  EXPECT_NEAR(p.col(1).mean(), 0.7, 0.01);
  // residual input slopes from the random init decay slowly
  EXPECT_LT((p.col(0).array() - 0.3).abs().maxCoeff(), 0.03);
  EXPECT_EQ(result.report.fidelity, 1.0);
}

TEST(Imitate, ZeroEpochsReturnsInitialNetwork) {
  const auto ds = make_synthetic(SyntheticKind::Blobs, 60, 2, 1.0, 2);
  const auto rf = train_forest(ds, 3, {}, 1);
  auto train = short_training(0);
  const auto result = imitate(rf, stats_of(ds), std::vector<int>{4}, {}, train, {200, 0, false});
  const auto initial = mlp_new(std::vector<int>{2, 4, 2}, train.seed);
  for (std::size_t l = 0; l < initial.layer_count(); ++l) EXPECT_EQ(result.student.weights[l], initial.weights[l]);
  EXPECT_TRUE(result.report.train_loss.empty());
  EXPECT_TRUE(result.report.pool_loss.empty());
  EXPECT_FALSE(result.report.selected_epoch.has_value());
  EXPECT_EQ(result.report.samples_consumed, 0u);
}

TEST(Imitate, SelectedEpochIsPoolArgminAndRunsReproduce) {
  const auto ds = make_synthetic(SyntheticKind::TwoMoons, 120, 2, 0.1, 4);
  const auto rf = train_forest(ds, 5, {}, 2);
  GenerationConfig gen;
  gen.seed = 17;
  auto train = short_training(8, 10);
  train.learning_rate = 0.05;
  const ImitationOptions opts{300, 300, false};
  const auto a = imitate(rf, stats_of(ds), std::vector<int>{8, 8}, gen, train, opts, &ds);
  const auto& pool = a.report.pool_loss;
  ASSERT_EQ(pool.size(), 8u);
  ASSERT_TRUE(a.report.selected_epoch.has_value());
  EXPECT_EQ(*a.report.selected_epoch, std::min_element(pool.begin(), pool.end()) - pool.begin());
  EXPECT_EQ(a.report.samples_consumed, 8u * 10u * 32u);
  EXPECT_EQ(a.report.probe_points, 300u + ds.size());
  // the returned snapshot scores the selected pool loss again
  RowMatrix px, py;
  ForestSampler(rf, stats_of(ds), gen).fill(0, opts.pool_size, px, py);
  EXPECT_DOUBLE_EQ(mean_loss(a.student, normalize_rows(px, stats_of(ds)), py), pool[static_cast<std::size_t>(*a.report.selected_epoch)]);

  const auto b = imitate(rf, stats_of(ds), std::vector<int>{8, 8}, gen, train, opts, &ds);
  EXPECT_EQ(to_json(a.report), to_json(b.report));
  EXPECT_EQ(to_json(a.student), to_json(b.student));
  const double f = *a.report.fidelity;
  EXPECT_GE(f, 0.0);
  EXPECT_LE(f, 1.0);
}

TEST(Imitate, HardLabelsStillTrain) {
  const auto ds = make_synthetic(SyntheticKind::Blobs, 80, 2, 0.5, 6);
  const auto rf = train_forest(ds, 5, {}, 3);
  const auto r = imitate(rf, stats_of(ds), std::vector<int>{8}, {}, short_training(3), {200, 100, true});
  EXPECT_EQ(r.report.train_loss.size(), 3u);
  for (double l : r.report.train_loss) EXPECT_TRUE(std::isfinite(l));
}

TEST(EvaluateAccuracy, UnlimitedTreeFitsTrainingData) {
  const auto ds = make_synthetic(SyntheticKind::TwoMoons, 200, 2, 0.3, 8);
  TreeTrainParams p;
  p.bootstrap = false;
  const auto rf = train_forest(ds, 1, p, 0);
  EXPECT_EQ(evaluate_accuracy(rf, ds), 1.0);
}

TEST(EvaluateAccuracy, RandomNetworkIsNearChance) {
  // labels independent of the inputs
  Dataset ds;
  ds.class_count = 2;
  Rng rng(21);
  ds.features.resize(2000, 3);
  for (Eigen::Index i = 0; i < ds.features.size(); ++i) ds.features.data()[i] = rng.normal(0.0, 1.0);
  for (int i = 0; i < 2000; ++i) ds.labels.push_back(i % 2);
  const auto stats = stats_of(ds);
  double sum = 0.0;
  for (std::uint64_t s = 0; s < 10; ++s) sum += evaluate_accuracy(mlp_new(std::vector<int>{3, 16, 2}, s), stats, ds);
  EXPECT_NEAR(sum / 10.0, 0.5, 0.05);
}

TEST(EvaluateAccuracy, Errors) {
  const auto ds = make_synthetic(SyntheticKind::Blobs, 20, 2, 0.5, 1);
  const auto rf = train_forest(ds, 2, {}, 0);
  Dataset empty;
  empty.class_count = 2;
  empty.features.resize(0, 2);
  EXPECT_THROW(evaluate_accuracy(rf, empty), DataError);
  EXPECT_THROW(evaluate_accuracy(mlp_new(std::vector<int>{2, 2}, 0), stats_of(ds), empty), DataError);
  EXPECT_THROW(evaluate_accuracy(mlp_new(std::vector<int>{3, 2}, 0), stats_of(ds), ds), DimensionError);
}

TEST(EvaluateFidelity, MappedTeacherAgreesEverywhere) {
  const auto ds = make_synthetic(SyntheticKind::XorGrid, 200, 2, 0.1, 9);
  const auto rf = train_forest(ds, 7, {}, 4);
  const auto stats = stats_of(ds);
  const auto probe = make_probe_set(stats, {}, 2000, 99, &ds.features);
  EXPECT_EQ(probe.rows(), 2200);
  EXPECT_EQ(evaluate_fidelity(map_direct(rf), rf, probe), 1.0);
}

TEST(EvaluateFidelity, UniformStudentMatchesClassZeroFrequency) {
  const auto ds = make_synthetic(SyntheticKind::Blobs, 200, 2, 1.0, 10);
  const auto rf = train_forest(ds, 5, {}, 5);
  const auto stats = stats_of(ds);
  auto student = mlp_new(std::vector<int>{2, 4, 2}, 0);
  for (auto& w : student.weights) w.setZero();
  const auto probe = make_probe_set(stats, {}, 1000, 7);
  std::size_t zeros = 0;
  for (Eigen::Index r = 0; r < probe.rows(); ++r) {
    const std::vector<double> x(probe.row(r).data(), probe.row(r).data() + probe.cols());
    zeros += argmax(predict_forest(rf, x)) == 0;
  }
  EXPECT_DOUBLE_EQ(evaluate_fidelity(student, stats, rf, probe), static_cast<double>(zeros) / 1000.0);
}

TEST(EvaluateFidelity, SinglePointAndEmptyProbe) {
  const auto ds = make_synthetic(SyntheticKind::Blobs, 50, 2, 1.0, 11);
  const auto rf = train_forest(ds, 3, {}, 6);
  const auto stats = stats_of(ds);
  const auto one = make_probe_set(stats, {}, 1, 3);
  const double f = evaluate_fidelity(mlp_new(std::vector<int>{2, 3, 2}, 1), stats, rf, one);
  EXPECT_TRUE(f == 0.0 || f == 1.0);
  EXPECT_THROW(evaluate_fidelity(mlp_new(std::vector<int>{2, 3, 2}, 1), stats, rf, RowMatrix(0, 2)), DataError);
}

}  // namespace
}  // namespace nrfi
