#include "nrfi/feature_stats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "nrfi/error.hpp"

namespace nrfi {

FeatureStats compute_feature_stats(const RowMatrix& features) {
  if (features.rows() == 0 || features.cols() == 0) throw DataError("cannot compute feature statistics of an empty matrix");
  const auto n = static_cast<std::size_t>(features.cols());
  const double rows = static_cast<double>(features.rows());
  FeatureStats s;
  s.min.resize(n);
  s.max.resize(n);
  s.mean.resize(n);
  s.stddev.resize(n);
  s.absmax.resize(n);
  for (std::size_t f = 0; f < n; ++f) {
    const auto col = features.col(static_cast<Eigen::Index>(f));
    s.min[f] = col.minCoeff();
    s.max[f] = col.maxCoeff();
    s.absmax[f] = col.cwiseAbs().maxCoeff();
    const double mean = col.sum() / rows;
    // rounding can push the mean a hair outside [min, max] for constant columns
    s.mean[f] = std::clamp(mean, s.min[f], s.max[f]);
    s.stddev[f] = std::sqrt((col.array() - mean).square().sum() / rows);
  }
  return s;
}

void normalize_into(std::span<const double> x, const FeatureStats& stats, std::span<double> out) {
  if (x.size() != stats.size() || out.size() != stats.size())
    throw DimensionError("normalize: expected " + std::to_string(stats.size()) + " features, got " + std::to_string(x.size()));
  for (std::size_t f = 0; f < x.size(); ++f) {
    const double divisor = stats.absmax[f] == 0.0 ? 1.0 : stats.absmax[f];
    out[f] = (x[f] - stats.mean[f]) / divisor;
  }
}

std::vector<double> normalize(std::span<const double> x, const FeatureStats& stats) {
  std::vector<double> out(x.size());
  normalize_into(x, stats, out);
  return out;
}

RowMatrix normalize_rows(const RowMatrix& features, const FeatureStats& stats) {
  RowMatrix out(features.rows(), features.cols());
  const auto cols = static_cast<std::size_t>(features.cols());
  for (Eigen::Index r = 0; r < features.rows(); ++r)
    normalize_into({features.data() + r * features.cols(), cols}, stats, {out.data() + r * out.cols(), cols});
  return out;
}

nlohmann::json to_json(const FeatureStats& stats) {
  return {{"f_min", stats.min}, {"f_max", stats.max}, {"f_mean", stats.mean}, {"f_std", stats.stddev}, {"f_absmax", stats.absmax}};
}

FeatureStats feature_stats_from_json(const nlohmann::json& j) {
  FeatureStats s;
  try {
    j.at("f_min").get_to(s.min);
    j.at("f_max").get_to(s.max);
    j.at("f_mean").get_to(s.mean);
    j.at("f_std").get_to(s.stddev);
    j.at("f_absmax").get_to(s.absmax);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed feature statistics: ") + e.what());
  }
  const auto n = s.mean.size();
  if (n == 0 || s.min.size() != n || s.max.size() != n || s.stddev.size() != n || s.absmax.size() != n)
    throw FormatError("feature statistics vectors must be non-empty and of equal length");
  for (std::size_t f = 0; f < n; ++f)
    if (!(s.min[f] <= s.max[f]) || s.stddev[f] < 0.0 || s.absmax[f] < 0.0)
      throw FormatError("feature statistics violate min <= max, std >= 0, absmax >= 0 at feature " + std::to_string(f));
  return s;
}

void save_feature_stats(const FeatureStats& stats, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << to_json(stats).dump(2) << '\n';
}

FeatureStats load_feature_stats(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open feature statistics file: " + path.string());
  try {
    return feature_stats_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("cannot parse " + path.string() + ": " + e.what());
  }
}

}  // namespace nrfi
