#include "nrfi/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "nrfi/error.hpp"
#include "nrfi/random.hpp"

namespace nrfi {

void Mlp::validate() const {
  if (layer_sizes.size() < 2) throw DimensionError("a network needs at least an input and an output layer");
  for (int s : layer_sizes)
    if (s < 1) throw DimensionError("layer sizes must be at least 1");
  if (weights.size() != layer_sizes.size() - 1 || biases.size() != weights.size())
    throw DimensionError("expected " + std::to_string(layer_sizes.size() - 1) + " weight layers");
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l].rows() != layer_sizes[l + 1] || weights[l].cols() != layer_sizes[l])
      throw DimensionError("layer " + std::to_string(l) + " weight shape does not match layer_sizes");
    if (biases[l].size() != layer_sizes[l + 1])
      throw DimensionError("layer " + std::to_string(l) + " bias length does not match layer_sizes");
  }
}

Mlp mlp_new(std::span<const int> layer_sizes, std::uint64_t seed) {
  Mlp net;
  net.layer_sizes.assign(layer_sizes.begin(), layer_sizes.end());
  if (net.layer_sizes.size() < 2) throw DimensionError("a network needs at least an input and an output layer");
  for (int s : net.layer_sizes)
    if (s < 1) throw DimensionError("layer sizes must be at least 1, got " + std::to_string(s));
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < net.layer_sizes.size(); ++l) {
    const int fan_in = net.layer_sizes[l];
    const int fan_out = net.layer_sizes[l + 1];
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    Eigen::MatrixXd w(fan_out, fan_in);
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = rng.uniform(-bound, bound);
    net.weights.push_back(std::move(w));
    net.biases.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  return net;
}

std::vector<int> architecture(int n_inputs, std::span<const int> hidden, int n_outputs) {
  std::vector<int> sizes{n_inputs};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(n_outputs);
  return sizes;
}

namespace {

// Columns are samples. Stable softmax per column.
void softmax_columns(Eigen::MatrixXd& z) {
  for (Eigen::Index c = 0; c < z.cols(); ++c) {
    auto col = z.col(c);
    col.array() = (col.array() - col.maxCoeff()).exp();
    col /= col.sum();
  }
}

struct ForwardPass {
  std::vector<Eigen::MatrixXd> pre;  // pre-activations per layer
  std::vector<Eigen::MatrixXd> act;  // act[0] = input, act[l+1] = output of layer l
};

ForwardPass run_forward(const Mlp& net, const RowMatrix& x) {
  if (x.cols() != net.input_size())
    throw DimensionError("network expects " + std::to_string(net.input_size()) + " inputs, got " + std::to_string(x.cols()));
  ForwardPass fp;
  fp.act.emplace_back(x.transpose());
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    Eigen::MatrixXd z = net.weights[l] * fp.act.back();
    z.colwise() += net.biases[l];
    Eigen::MatrixXd a = z;
    if (l + 1 < net.layer_count())
      a = a.cwiseMax(0.0);
    else
      softmax_columns(a);
    fp.pre.push_back(std::move(z));
    fp.act.push_back(std::move(a));
  }
  return fp;
}

double mean_cross_entropy(const Eigen::MatrixXd& probs, const RowMatrix& target) {
  if (target.rows() != probs.cols() || target.cols() != probs.rows())
    throw DimensionError("target shape does not match network output");
  double total = 0.0;
  for (Eigen::Index r = 0; r < target.rows(); ++r)
    for (Eigen::Index c = 0; c < target.cols(); ++c)
      if (target(r, c) != 0.0) total -= target(r, c) * std::log(std::max(probs(c, r), 1e-12));
  return total / static_cast<double>(target.rows());
}

}  // namespace

RowMatrix forward_batch(const Mlp& net, const RowMatrix& x) {
  return run_forward(net, x).act.back().transpose();
}

std::vector<double> forward(const Mlp& net, std::span<const double> x) {
  const RowMatrix row = Eigen::Map<const RowMatrix>(x.data(), 1, static_cast<Eigen::Index>(x.size()));
  const RowMatrix out = forward_batch(net, row);
  return {out.data(), out.data() + out.size()};
}

double cross_entropy(std::span<const double> probs, std::span<const double> target) {
  if (probs.size() != target.size()) throw DimensionError("cross_entropy: length mismatch");
  double loss = 0.0;
  for (std::size_t c = 0; c < probs.size(); ++c)
    if (target[c] != 0.0) loss -= target[c] * std::log(std::max(probs[c], 1e-12));
  return loss;
}

double mean_loss(const Mlp& net, const RowMatrix& x, const RowMatrix& target) {
  return mean_cross_entropy(run_forward(net, x).act.back(), target);
}

double loss_and_gradients(const Mlp& net, const RowMatrix& x, const RowMatrix& target, Gradients& grads) {
  if (x.rows() == 0) throw DimensionError("empty batch");
  const ForwardPass fp = run_forward(net, x);
  const double loss = mean_cross_entropy(fp.act.back(), target);

  const std::size_t L = net.layer_count();
  grads.weights.resize(L);
  grads.biases.resize(L);
  // softmax + cross-entropy: dL/dz = (p - y) / B
  Eigen::MatrixXd delta = (fp.act.back() - target.transpose()) / static_cast<double>(x.rows());
  for (std::size_t l = L; l-- > 0;) {
    grads.weights[l] = delta * fp.act[l].transpose();
    grads.biases[l] = delta.rowwise().sum();
    if (l == 0) break;
    Eigen::MatrixXd back = net.weights[l].transpose() * delta;
    delta = back.cwiseProduct((fp.pre[l - 1].array() > 0.0).cast<double>().matrix());
  }
  return loss;
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0)) throw Error("learning rate must be non-negative");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw Error("momentum must lie in [0, 1)");
  if (batch_size < 1) throw Error("batch size must be positive");
  if (steps_per_epoch < 1) throw Error("steps per epoch must be positive");
  if (epochs < 0) throw Error("epochs must be non-negative");
}

nlohmann::json to_json(const TrainConfig& cfg) {
  return {{"learning_rate", cfg.learning_rate}, {"momentum", cfg.momentum}, {"batch_size", cfg.batch_size},
          {"steps_per_epoch", cfg.steps_per_epoch}, {"epochs", cfg.epochs}, {"seed", cfg.seed}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig cfg;
  cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
  cfg.momentum = j.value("momentum", cfg.momentum);
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.steps_per_epoch = j.value("steps_per_epoch", cfg.steps_per_epoch);
  cfg.epochs = j.value("epochs", cfg.epochs);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.validate();
  return cfg;
}

OptimizerState::OptimizerState(const Mlp& net) {
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    weight_velocity.push_back(Eigen::MatrixXd::Zero(net.weights[l].rows(), net.weights[l].cols()));
    bias_velocity.push_back(Eigen::VectorXd::Zero(net.biases[l].size()));
  }
}

double train_step(Mlp& net, OptimizerState& opt, const RowMatrix& x, const RowMatrix& target, const TrainConfig& cfg) {
  Gradients g;
  const double loss = loss_and_gradients(net, x, target, g);
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    opt.weight_velocity[l] = cfg.momentum * opt.weight_velocity[l] - cfg.learning_rate * g.weights[l];
    opt.bias_velocity[l] = cfg.momentum * opt.bias_velocity[l] - cfg.learning_rate * g.biases[l];
    net.weights[l] += opt.weight_velocity[l];
    net.biases[l] += opt.bias_velocity[l];
  }
  return loss;
}

GradientCheckResult gradient_check(const Mlp& net, const RowMatrix& x, const RowMatrix& target, double eps) {
  if (!(eps > 0.0)) throw Error("gradient_check: eps must be positive");
  GradientCheckResult result;
  result.min_hidden_margin = std::numeric_limits<double>::infinity();
  const ForwardPass fp = run_forward(net, x);
  for (std::size_t l = 0; l + 1 < fp.pre.size(); ++l)
    result.min_hidden_margin = std::min(result.min_hidden_margin, fp.pre[l].cwiseAbs().minCoeff());

  Gradients g;
  loss_and_gradients(net, x, target, g);
  Mlp probe = net;
  auto compare = [&](double& param, double analytic) {
    const double saved = param;
    param = saved + eps;
    const double up = mean_loss(probe, x, target);
    param = saved - eps;
    const double down = mean_loss(probe, x, target);
    param = saved;
    const double numeric = (up - down) / (2.0 * eps);
    const double rel = std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-10});
    result.max_relative_error = std::max(result.max_relative_error, rel);
    ++result.parameters_checked;
  };
  for (std::size_t l = 0; l < probe.layer_count(); ++l) {
    for (Eigen::Index i = 0; i < probe.weights[l].size(); ++i) compare(probe.weights[l].data()[i], g.weights[l].data()[i]);
    for (Eigen::Index i = 0; i < probe.biases[l].size(); ++i) compare(probe.biases[l][i], g.biases[l][i]);
  }
  return result;
}

std::size_t count_parameters(const Mlp& net) {
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < net.layer_sizes.size(); ++l)
    total += static_cast<std::size_t>(net.layer_sizes[l]) * static_cast<std::size_t>(net.layer_sizes[l + 1]) +
             static_cast<std::size_t>(net.layer_sizes[l + 1]);
  return total;
}

}  // namespace nrfi
