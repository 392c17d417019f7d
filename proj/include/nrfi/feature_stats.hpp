#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "nrfi/dataset.hpp"

namespace nrfi {

/// Per-feature statistics of a training matrix. They drive data generation
/// (sampling ranges and scales) and input normalization for the student.
struct FeatureStats {
  std::vector<double> min;
  std::vector<double> max;
  std::vector<double> mean;
  /// Population standard deviation (divisor = row count).
  std::vector<double> stddev;
  std::vector<double> absmax;

  std::size_t size() const { return mean.size(); }
};

FeatureStats compute_feature_stats(const RowMatrix& features);

/// (x - mean) / absmax per feature; a zero absmax divides by 1 instead.
std::vector<double> normalize(std::span<const double> x, const FeatureStats& stats);
void normalize_into(std::span<const double> x, const FeatureStats& stats, std::span<double> out);
RowMatrix normalize_rows(const RowMatrix& features, const FeatureStats& stats);

nlohmann::json to_json(const FeatureStats& stats);
FeatureStats feature_stats_from_json(const nlohmann::json& j);

void save_feature_stats(const FeatureStats& stats, const std::filesystem::path& path);
FeatureStats load_feature_stats(const std::filesystem::path& path);

}  // namespace nrfi
