#include "nrfi/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>

#include "nrfi/error.hpp"

namespace nrfi {

void GenerationConfig::validate() const {
  if (!(c_std >= 1.0)) throw Error("c_std must be at least 1");
  if (!(p_zero >= 0.0 && p_zero <= 1.0)) throw Error("p_zero must lie in [0, 1]");
  if (!(w_path_sigma >= 0.0)) throw Error("w_path_sigma must be non-negative");
  if (fixed_w_path && !(*fixed_w_path >= 1.0)) throw Error("w_path must be at least 1");
  if (fixed_p_forest && !(*fixed_p_forest >= 0.0 && *fixed_p_forest <= 1.0)) throw Error("p_forest must lie in [0, 1]");
}

nlohmann::json to_json(const GenerationConfig& cfg) {
  nlohmann::json j = {{"c_std", cfg.c_std}, {"p_zero", cfg.p_zero}, {"w_path_sigma", cfg.w_path_sigma},
                      {"use_pw", cfg.use_pw}, {"use_dts", cfg.use_dts}, {"seed", cfg.seed}};
  j["fixed_w_path"] = cfg.fixed_w_path ? nlohmann::json(*cfg.fixed_w_path) : nlohmann::json(nullptr);
  j["fixed_p_forest"] = cfg.fixed_p_forest ? nlohmann::json(*cfg.fixed_p_forest) : nlohmann::json(nullptr);
  return j;
}

GenerationConfig generation_config_from_json(const nlohmann::json& j) {
  GenerationConfig cfg;
  cfg.c_std = j.value("c_std", cfg.c_std);
  cfg.p_zero = j.value("p_zero", cfg.p_zero);
  cfg.w_path_sigma = j.value("w_path_sigma", cfg.w_path_sigma);
  cfg.use_pw = j.value("use_pw", cfg.use_pw);
  cfg.use_dts = j.value("use_dts", cfg.use_dts);
  cfg.seed = j.value("seed", cfg.seed);
  if (j.contains("fixed_w_path") && !j["fixed_w_path"].is_null()) cfg.fixed_w_path = j["fixed_w_path"].get<double>();
  if (j.contains("fixed_p_forest") && !j["fixed_p_forest"].is_null()) cfg.fixed_p_forest = j["fixed_p_forest"].get<double>();
  cfg.validate();
  return cfg;
}

std::vector<double> init_sample(const FeatureStats& stats, const GenerationConfig& cfg, Rng& rng) {
  const std::size_t n = stats.size();
  std::vector<double> x(n);
  for (std::size_t f = 0; f < n; ++f)
    x[f] = std::clamp(rng.normal(stats.mean[f], cfg.c_std * stats.stddev[f]), stats.min[f], stats.max[f]);
  for (std::size_t f = 0; f < n; ++f)
    if (rng.bernoulli(cfg.p_zero)) x[f] = 0.0;
  return x;
}

namespace {

double draw_around_threshold(double threshold, double stddev, Rng& rng) {
  if (stddev == 0.0) return threshold;
  double z = rng.normal();
  while (std::abs(z) > kThresholdDrawTail) z = rng.normal();
  return threshold + stddev * z;
}

double degenerate_gap(const FeatureStats& stats, std::size_t f) {
  return 1e-9 * std::max(1.0, stats.max[f] - stats.min[f]);
}

// Value strictly below the threshold.
double draw_left(double threshold, const FeatureStats& stats, std::size_t f, Rng& rng) {
  const double below = std::nextafter(threshold, -std::numeric_limits<double>::infinity());
  if (threshold <= stats.min[f]) return std::min(threshold - degenerate_gap(stats, f), below);
  const double v = rng.uniform(stats.min[f], threshold);
  return v < threshold ? v : below;
}

// Value at or above the threshold.
double draw_right(double threshold, const FeatureStats& stats, std::size_t f, Rng& rng) {
  if (threshold >= stats.max[f]) return threshold;
  return std::max(threshold, rng.uniform(threshold, stats.max[f]));
}

}  // namespace

NodeIndex generate_from_tree(const DecisionTree& tree, const ClassWeights& weights, GenerationState& state,
                             const FeatureStats& stats, double w_path, const GenerationConfig& cfg, Rng& rng,
                             std::vector<WalkStep>* trace) {
  const auto t = static_cast<std::size_t>(state.target);
  NodeIndex n = tree.root();
  while (!tree.is_leaf(n)) {
    const auto& s = tree.split(n);
    const auto f = static_cast<std::size_t>(s.feature);
    double& xf = state.x[f];

    const bool first_use = !state.used_features[f];
    if (first_use) xf = draw_around_threshold(s.threshold, stats.stddev[f], rng);

    double w_left = weights.at(s.left)[t];
    double w_right = weights.at(s.right)[t];
    if (!first_use && cfg.use_pw) (xf < s.threshold ? w_left : w_right) *= w_path;

    // L2 normalization, then renormalized to a proper selection probability
    double p_left = 0.5;
    if (const double norm = std::hypot(w_left, w_right); norm > 0.0) {
      const double l = w_left / norm;
      const double r = w_right / norm;
      p_left = l / (l + r);
    }
    const bool go_left = rng.uniform() < p_left;

    bool corrected = false;
    if (go_left && xf >= s.threshold) {
      xf = draw_left(s.threshold, stats, f, rng);
      corrected = true;
    } else if (!go_left && xf < s.threshold) {
      xf = draw_right(s.threshold, stats, f, rng);
      corrected = true;
    }
    state.used_features[f] = true;
    if (trace) trace->push_back({n, s.feature, s.threshold, first_use, p_left, go_left, corrected, xf});
    n = go_left ? s.left : s.right;
  }
  return n;
}

std::size_t subset_size(std::size_t n_trees, double p_forest, bool use_dts) {
  if (!use_dts) return n_trees;
  const auto k = static_cast<std::size_t>(std::ceil(static_cast<double>(n_trees) * p_forest));
  return std::clamp<std::size_t>(k, 1, n_trees);
}

ForestSampler::ForestSampler(const RandomForest& rf, FeatureStats stats, GenerationConfig cfg)
    : rf_(rf), stats_(std::move(stats)), cfg_(std::move(cfg)) {
  cfg_.validate();
  if (static_cast<int>(stats_.size()) != rf_.feature_count())
    throw DimensionError("feature statistics cover " + std::to_string(stats_.size()) + " features, forest expects " +
                         std::to_string(rf_.feature_count()));
  weights_.reserve(rf_.tree_count());
  for (const auto& tree : rf_.trees()) weights_.push_back(compute_class_weights(tree, rf_.class_count()));
}

GeneratedSample ForestSampler::generate(int target, Rng& rng) const {
  if (target < 0 || target >= rf_.class_count()) throw Error("target class " + std::to_string(target) + " out of range");
  GeneratedSample out;
  out.target = target;
  GenerationState state(init_sample(stats_, cfg_, rng), target);

  const double w_path_draw = 1.0 + std::abs(rng.normal(0.0, cfg_.w_path_sigma));
  const double p_forest_draw = rng.uniform();
  out.w_path = cfg_.fixed_w_path.value_or(w_path_draw);
  out.p_forest = cfg_.fixed_p_forest.value_or(p_forest_draw);

  const std::size_t n_trees = rf_.tree_count();
  std::vector<std::size_t> order(n_trees);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng.engine());
  out.trees_used = subset_size(n_trees, out.p_forest, cfg_.use_dts);

  for (std::size_t i = 0; i < out.trees_used; ++i) {
    const auto t = order[i];
    generate_from_tree(rf_.trees()[t], weights_[t], state, stats_, out.w_path, cfg_, rng);
  }
  out.y = predict_forest(rf_, state.x);
  out.x = std::move(state.x);
  return out;
}

GeneratedSample ForestSampler::at(std::uint64_t position) const {
  Rng rng(derive_seed(cfg_.seed, position));
  return generate(static_cast<int>(position % static_cast<std::uint64_t>(rf_.class_count())), rng);
}

void ForestSampler::fill(std::uint64_t first, std::size_t count, RowMatrix& x, RowMatrix& y) const {
  x.resize(static_cast<Eigen::Index>(count), rf_.feature_count());
  y.resize(static_cast<Eigen::Index>(count), rf_.class_count());
  for (std::size_t i = 0; i < count; ++i) {
    const auto s = at(first + i);
    const auto r = static_cast<Eigen::Index>(i);
    x.row(r) = Eigen::Map<const Eigen::RowVectorXd>(s.x.data(), x.cols());
    y.row(r) = Eigen::Map<const Eigen::RowVectorXd>(s.y.data(), y.cols());
  }
}

GeneratedSample generate_from_forest(const RandomForest& rf, int target, const FeatureStats& stats,
                                     const GenerationConfig& cfg, Rng& rng) {
  return ForestSampler(rf, stats, cfg).generate(target, rng);
}

ConfidenceHistogram confidence_distribution(const RandomForest& rf, const FeatureStats& stats,
                                            const GenerationConfig& cfg, std::size_t n_samples, int bins) {
  if (n_samples < 1) throw Error("confidence_distribution needs at least one sample");
  if (bins < 2) throw Error("confidence_distribution needs at least two bins");
  const ForestSampler sampler(rf, stats, cfg);
  ConfidenceHistogram h;
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  h.confidences.reserve(n_samples);
  for (std::size_t k = 0; k < n_samples; ++k) {
    const auto s = sampler.at(k);
    const double conf = s.y[static_cast<std::size_t>(s.target)];
    h.confidences.push_back(conf);
    const auto bin = std::min(static_cast<std::size_t>(conf * bins), static_cast<std::size_t>(bins - 1));
    ++h.counts[bin];
  }
  const double n = static_cast<double>(n_samples);
  h.mean = std::accumulate(h.confidences.begin(), h.confidences.end(), 0.0) / n;
  double ss = 0.0;
  for (double c : h.confidences) ss += (c - h.mean) * (c - h.mean);
  h.stddev = std::sqrt(ss / n);
  return h;
}

}  // namespace nrfi
