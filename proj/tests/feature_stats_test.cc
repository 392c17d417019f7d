#include <cmath>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "nrfi/error.hpp"
#include "nrfi/feature_stats.hpp"
#include "test_support.hpp"

namespace nrfi {
namespace {

TEST(FeatureStats, SingleRow) {
  RowMatrix x(1, 3);
  x << 1.5, -2.0, 0.0;
  const auto s = compute_feature_stats(x);
  for (int f = 0; f < 3; ++f) {
    EXPECT_EQ(s.min[f], x(0, f));
    EXPECT_EQ(s.max[f], x(0, f));
    EXPECT_EQ(s.mean[f], x(0, f));
    EXPECT_EQ(s.stddev[f], 0.0);
    EXPECT_EQ(s.absmax[f], std::abs(x(0, f)));
  }
}

TEST(FeatureStats, SymmetricColumn) {
  RowMatrix x(2, 1);
  x << -2.0, 2.0;
  const auto s = compute_feature_stats(x);
  EXPECT_EQ(s.min[0], -2.0);
  EXPECT_EQ(s.max[0], 2.0);
  EXPECT_EQ(s.mean[0], 0.0);
  EXPECT_EQ(s.stddev[0], 2.0);
  EXPECT_EQ(s.absmax[0], 2.0);
}

TEST(FeatureStats, PopulationStd) {
  RowMatrix x(3, 1);
  x << 1.0, 2.0, 3.0;
  const auto s = compute_feature_stats(x);
  EXPECT_DOUBLE_EQ(s.mean[0], 2.0);
  // ((1-2)^2 + 0 + (3-2)^2) / 3
  EXPECT_DOUBLE_EQ(s.stddev[0], std::sqrt(2.0 / 3.0));
}

TEST(FeatureStats, EmptyMatrixIsAnError) { EXPECT_THROW(compute_feature_stats(RowMatrix(0, 2)), DataError); }

TEST(Normalize, Cases) {
  FeatureStats s{{-4, 0}, {4, 0}, {0, 0}, {1, 0}, {4, 0}};
  EXPECT_EQ(normalize(std::vector<double>{2.0, 0.0}, s), (std::vector<double>{0.5, 0.0}));
  EXPECT_EQ(normalize(s.mean, s), (std::vector<double>{0.0, 0.0}));
  // constant-zero feature: divisor falls back to 1
  EXPECT_EQ(normalize(std::vector<double>{0.0, 0.0}, s)[1], 0.0);
  EXPECT_THROW(normalize(std::vector<double>{1.0}, s), DimensionError);
}

// Property: normalized training data stays in [-2, 2], and in [-1, 1] for zero-mean columns.
TEST(Normalize, RangeProperty) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const auto rows = 1 + static_cast<Eigen::Index>(rng.index(40));
    RowMatrix x(rows, 4);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < 4; ++c) x(r, c) = rng.uniform(-10.0, 10.0) + (c == 3 ? 20.0 : 0.0);
    const auto s = compute_feature_stats(x);
    const auto n = normalize_rows(x, s);
    EXPECT_LE(n.cwiseAbs().maxCoeff(), 2.0);
    // zero-mean variant
    RowMatrix centered = x.rowwise() - x.colwise().mean();
    const auto sc = compute_feature_stats(centered);
    EXPECT_LE(normalize_rows(centered, sc).cwiseAbs().maxCoeff(), 1.0 + 1e-12);
    for (std::size_t f = 0; f < s.size(); ++f) {
      EXPECT_LE(s.min[f], s.mean[f]);
      EXPECT_LE(s.mean[f], s.max[f]);
    }
  }
}

TEST(FeatureStats, JsonRoundTripAndValidation) {
  RowMatrix x(3, 2);
  x << 0.1, 7.0, 0.2, -1.0, 1.0 / 3.0, 2.0;
  const auto s = compute_feature_stats(x);
  const auto j = to_json(s);
  for (const char* key : {"f_min", "f_max", "f_mean", "f_std", "f_absmax"}) EXPECT_TRUE(j.contains(key)) << key;
  const auto back = feature_stats_from_json(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(back.mean, s.mean);
  EXPECT_EQ(back.stddev, s.stddev);
  auto bad = j;
  bad["f_std"][0] = -1.0;
  EXPECT_THROW(feature_stats_from_json(bad), FormatError);
  bad = j;
  bad.erase("f_max");
  EXPECT_THROW(feature_stats_from_json(bad), FormatError);
}

}  // namespace
}  // namespace nrfi
