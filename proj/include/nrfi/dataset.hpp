#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Core>

namespace nrfi {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Labeled tabular data. Rows are samples, columns are features.
struct Dataset {
  RowMatrix features;
  std::vector<int> labels;
  int class_count = 0;
  /// Original label spelling per class index; empty for synthetic data.
  std::vector<std::string> class_names;

  std::size_t size() const { return labels.size(); }
  int feature_count() const { return static_cast<int>(features.cols()); }

  std::span<const double> row(std::size_t i) const {
    return {features.data() + i * features.cols(), static_cast<std::size_t>(features.cols())};
  }

  /// Rows at the given indices, in that order. Duplicates are allowed.
  Dataset subset(std::span<const std::size_t> indices) const;

  /// Throws DataError unless labels are in range, shapes agree, N >= 1, C >= 2.
  void validate() const;
};

/// Label column selector for load_csv: a header name or a zero-based index.
using LabelColumn = std::variant<std::string, std::size_t>;

/// Reads a headered CSV. Feature columns must be numeric. Labels are
/// re-encoded to [0, C): numerically ascending when every label parses as an
/// integer, otherwise lexicographically by the original string.
Dataset load_csv(const std::filesystem::path& path, const LabelColumn& label_column);

/// Writes features followed by a `label` column (class names when present).
void save_csv(const Dataset& ds, const std::filesystem::path& path);

struct SplitFractions {
  double train = 0.6;
  double validation = 0.2;
  double test = 0.2;
};

struct DatasetSplit {
  Dataset train;
  Dataset validation;
  Dataset test;
};

/// Stratified, seeded three-way split. The three parts are disjoint and cover
/// the input. Overall part sizes follow the fractions by largest remainder.
/// A class with at least three samples lands in every part; a smaller class
/// gives its first sample to train.
DatasetSplit split_dataset(const Dataset& ds, const SplitFractions& fractions, std::uint64_t seed);

/// Row indices of each part, as used by split_dataset.
std::array<std::vector<std::size_t>, 3> split_indices(const Dataset& ds,
                                                      const SplitFractions& fractions,
                                                      std::uint64_t seed);

/// Keeps at most n_limit rows per class, chosen by a seeded shuffle. Row
/// order of the survivors follows the input order.
Dataset limit_per_class(const Dataset& ds, int n_limit, std::uint64_t seed = 0);

enum class SyntheticKind { Blobs, TwoMoons, XorGrid };

SyntheticKind parse_synthetic_kind(std::string_view name);
std::string_view to_string(SyntheticKind kind);

/// Desk-scale stand-in datasets. Labels are assigned round-robin so classes
/// are balanced within one sample. `class_count` only applies to blobs; the
/// other kinds are binary.
///
/// - blobs: one isotropic Gaussian (std = noise) per class around a center
///   drawn uniformly from [-5, 5]^N.
/// - two_moons: two interleaving half circles in the first two features with
///   Gaussian noise; extra features are pure noise.
/// - xor_grid: points in [-1, 1]^2 labeled by the sign agreement of the first
///   two features, then jittered; extra features are pure noise.
Dataset make_synthetic(SyntheticKind kind, std::size_t n_samples, int n_features, double noise,
                       std::uint64_t seed, int class_count = 2);

/// Fraction of exactly-zero entries in a feature matrix.
double zero_fraction(const RowMatrix& features);

}  // namespace nrfi
