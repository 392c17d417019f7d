#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "nrfi/feature_stats.hpp"
#include "nrfi/forest.hpp"
#include "nrfi/random.hpp"

namespace nrfi {

/// Stochastic knobs of forest-guided data generation.
struct GenerationConfig {
  /// Multiplier on the per-feature std for the initial Gaussian draw.
  double c_std = 3.0;
  /// Per-element probability of zeroing the initial sample.
  double p_zero = 0.0;
  /// w_path ~ 1 + |Normal(0, w_path_sigma)|, drawn per sample.
  double w_path_sigma = 5.0;
  /// Path weighting: favour the branch the sample already takes when a
  /// feature is reused.
  bool use_pw = true;
  /// Decision tree subsets: route through only ceil(n_T * p_forest) trees,
  /// p_forest ~ Uniform(0, 1) drawn per sample.
  bool use_dts = true;
  std::uint64_t seed = 0;

  /// Overrides for the per-sample draws. The law is still sampled so the
  /// random stream stays aligned with the unforced configuration.
  std::optional<double> fixed_w_path;
  std::optional<double> fixed_p_forest;

  /// Throws Error on c_std < 1, p_zero outside [0, 1] and similar.
  void validate() const;
};

nlohmann::json to_json(const GenerationConfig& cfg);
GenerationConfig generation_config_from_json(const nlohmann::json& j);

/// Mutable walk state shared by all trees that shape one sample.
struct GenerationState {
  std::vector<double> x;
  std::vector<bool> used_features;
  int target = 0;

  GenerationState(std::vector<double> x0, int target_class)
      : x(std::move(x0)), used_features(x.size(), false), target(target_class) {}
};

/// One node visit of a guided walk, for inspection in tests and tools.
struct WalkStep {
  NodeIndex node = 0;
  int feature = 0;
  double threshold = 0.0;
  bool first_use = false;
  /// Probability with which the left child was selected.
  double p_left = 0.0;
  bool went_left = false;
  /// True when x[feature] had to be redrawn to follow the chosen branch.
  bool corrected = false;
  double value_after = 0.0;
};

/// x_f ~ Normal(mean_f, c_std * std_f) clipped to [min_f, max_f], then each
/// element zeroed with probability p_zero.
std::vector<double> init_sample(const FeatureStats& stats, const GenerationConfig& cfg, Rng& rng);

/// Threshold-centered draws are truncated at this many feature stds.
inline constexpr double kThresholdDrawTail = 4.0;

/// Walks one tree from the root to a leaf, editing state.x so that the
/// sample follows branches chosen at random in proportion to the target
/// class weight of each child. Returns the leaf reached. `trace`, when given,
/// receives one entry per visited split.
NodeIndex generate_from_tree(const DecisionTree& tree, const ClassWeights& weights, GenerationState& state,
                             const FeatureStats& stats, double w_path, const GenerationConfig& cfg, Rng& rng,
                             std::vector<WalkStep>* trace = nullptr);

struct GeneratedSample {
  std::vector<double> x;
  std::vector<double> y;
  int target = 0;
  double w_path = 1.0;
  double p_forest = 1.0;
  std::size_t trees_used = 0;
};

/// n_sub = ceil(n_T * p_forest), clamped to [1, n_T]; n_T without DTS.
std::size_t subset_size(std::size_t n_trees, double p_forest, bool use_dts);

/// Forest-level generator. Holds the teacher, its class weights and the
/// feature statistics; all of them are read-only after construction.
class ForestSampler {
 public:
  ForestSampler(const RandomForest& rf, FeatureStats stats, GenerationConfig cfg);

  /// One sample for target class t: initialize x, draw w_path and p_forest,
  /// walk a random subset of trees in random order sharing one
  /// GenerationState, then label with the full forest.
  GeneratedSample generate(int target, Rng& rng) const;

  /// Position k of the on-the-fly stream: target k mod C, random stream
  /// Rng(derive_seed(cfg.seed, k)).
  GeneratedSample at(std::uint64_t position) const;

  /// Positions [first, first + count) as row matrices.
  void fill(std::uint64_t first, std::size_t count, RowMatrix& x, RowMatrix& y) const;

  const RandomForest& forest() const { return rf_; }
  const FeatureStats& stats() const { return stats_; }
  const GenerationConfig& config() const { return cfg_; }
  const std::vector<ClassWeights>& class_weights() const { return weights_; }

 private:
  const RandomForest& rf_;
  FeatureStats stats_;
  GenerationConfig cfg_;
  std::vector<ClassWeights> weights_;
};

GeneratedSample generate_from_forest(const RandomForest& rf, int target, const FeatureStats& stats,
                                     const GenerationConfig& cfg, Rng& rng);

struct ConfidenceHistogram {
  std::vector<std::size_t> counts;
  double mean = 0.0;
  /// Population std of the target-class confidences.
  double stddev = 0.0;
  std::vector<double> confidences;
};

/// Histogram over [0, 1] of RF(x)_t for stream positions [0, n_samples).
ConfidenceHistogram confidence_distribution(const RandomForest& rf, const FeatureStats& stats,
                                            const GenerationConfig& cfg, std::size_t n_samples, int bins);

}  // namespace nrfi
