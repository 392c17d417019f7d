#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include "nrfi/dataset.hpp"

namespace nrfi {

/// Fully-connected network: ReLU after every hidden layer, softmax output.
/// weights[l] has shape (layer_sizes[l+1], layer_sizes[l]).
struct Mlp {
  std::vector<int> layer_sizes;
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  int input_size() const { return layer_sizes.front(); }
  int output_size() const { return layer_sizes.back(); }
  std::size_t layer_count() const { return weights.size(); }

  /// Throws DimensionError if parameter shapes disagree with layer_sizes.
  void validate() const;
};

/// Glorot-uniform weights, zero biases.
Mlp mlp_new(std::span<const int> layer_sizes, std::uint64_t seed);

/// [n_inputs, hidden..., n_outputs]
std::vector<int> architecture(int n_inputs, std::span<const int> hidden, int n_outputs);

std::vector<double> forward(const Mlp& net, std::span<const double> x);
/// Row-wise forward pass; rows of the result are probability vectors.
RowMatrix forward_batch(const Mlp& net, const RowMatrix& x);

/// -sum_c target_c * log(max(probs_c, 1e-12))
double cross_entropy(std::span<const double> probs, std::span<const double> target);

/// Mean cross-entropy of forward_batch(net, x) against target rows.
double mean_loss(const Mlp& net, const RowMatrix& x, const RowMatrix& target);

struct Gradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
};

/// Mean batch cross-entropy and its exact gradient by backpropagation.
double loss_and_gradients(const Mlp& net, const RowMatrix& x, const RowMatrix& target, Gradients& grads);

struct TrainConfig {
  double learning_rate = 0.01;
  double momentum = 0.9;
  int batch_size = 32;
  int steps_per_epoch = 100;
  int epochs = 100;
  std::uint64_t seed = 0;

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);

/// Velocity buffers for classical momentum, zero-initialized.
struct OptimizerState {
  std::vector<Eigen::MatrixXd> weight_velocity;
  std::vector<Eigen::VectorXd> bias_velocity;

  explicit OptimizerState(const Mlp& net);
};

/// One SGD step: v <- momentum * v - lr * grad; theta <- theta + v.
/// Returns the mean batch loss before the update.
double train_step(Mlp& net, OptimizerState& opt, const RowMatrix& x, const RowMatrix& target, const TrainConfig& cfg);

struct GradientCheckResult {
  double max_relative_error = 0.0;
  /// Smallest |pre-activation| over all hidden units and batch rows. The
  /// finite-difference comparison is only meaningful when this exceeds
  /// 10 * eps (no ReLU kink inside the stencil).
  double min_hidden_margin = 0.0;
  std::size_t parameters_checked = 0;

  bool kink_safe(double eps) const { return min_hidden_margin > 10.0 * eps; }
};

/// Compares backprop against central differences for every parameter;
/// relative error = |a - b| / max(|a|, |b|, 1e-10).
GradientCheckResult gradient_check(const Mlp& net, const RowMatrix& x, const RowMatrix& target, double eps);

std::size_t count_parameters(const Mlp& net);

nlohmann::json to_json(const Mlp& net);
Mlp mlp_from_json(const nlohmann::json& j);
void save_mlp(const Mlp& net, const std::filesystem::path& path, const nlohmann::json& extra);
void save_mlp(const Mlp& net, const std::filesystem::path& path);
Mlp load_mlp(const std::filesystem::path& path);
/// Whole JSON document of a saved model, including any extra fields.
nlohmann::json load_model_document(const std::filesystem::path& path);

}  // namespace nrfi
