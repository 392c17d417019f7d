#include "nrfi/mapping.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "nrfi/error.hpp"

namespace nrfi {

Activation parse_activation(std::string_view name) {
  if (name == "hard" || name == "step") return Activation::Step;
  if (name == "soft" || name == "sigmoid") return Activation::Sigmoid;
  throw Error("unknown activation mode '" + std::string(name) + "' (expected hard or soft)");
}

std::string_view to_string(Activation a) { return a == Activation::Step ? "step" : "sigmoid"; }

namespace {

double activate(double z, Activation a, double beta) {
  if (a == Activation::Step) return z >= 0.0 ? 1.0 : 0.0;
  return 1.0 / (1.0 + std::exp(-beta * z));
}

}  // namespace

std::vector<int> MappedNetwork::layer_sizes() const {
  return {n_features, static_cast<int>(splits.size()), static_cast<int>(leaves.size()), n_classes};
}

std::vector<double> MappedNetwork::forward(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != n_features)
    throw DimensionError("mapped network expects " + std::to_string(n_features) + " inputs, got " + std::to_string(x.size()));
  std::vector<double> hidden1(splits.size());
  for (std::size_t s = 0; s < splits.size(); ++s) {
    const double z = 1.0 * x[static_cast<std::size_t>(splits[s].feature)] + (-splits[s].threshold);
    hidden1[s] = activate(z, activation, beta);
  }
  std::vector<double> out(static_cast<std::size_t>(n_classes), 0.0);
  for (const auto& leaf : leaves) {
    double z = 0.0;
    for (const auto& [s, w] : leaf.inputs) z += w * hidden1[s];
    z += leaf.bias;
    const double h = activate(z, activation, beta);
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += h * leaf.output_weights[c];
  }
  return out;
}

nlohmann::json MappedNetwork::to_dense_json() const {
  const auto N = static_cast<std::size_t>(n_features);
  const auto S = splits.size();
  const auto L = leaves.size();
  const auto C = static_cast<std::size_t>(n_classes);

  std::vector<double> w1(S * N, 0.0), b1(S), w2(L * S, 0.0), b2(L), w3(C * L, 0.0), b3(C, 0.0);
  for (std::size_t s = 0; s < S; ++s) {
    w1[s * N + static_cast<std::size_t>(splits[s].feature)] = 1.0;
    b1[s] = -splits[s].threshold;
  }
  for (std::size_t l = 0; l < L; ++l) {
    for (const auto& [s, w] : leaves[l].inputs) w2[l * S + s] = w;
    b2[l] = leaves[l].bias;
    for (std::size_t c = 0; c < C; ++c) w3[c * L + l] = leaves[l].output_weights[c];
  }
  return {{"layer_sizes", layer_sizes()},
          {"weights", {std::move(w1), std::move(w2), std::move(w3)}},
          {"biases", {std::move(b1), std::move(b2), std::move(b3)}},
          {"activation", to_string(activation)},
          {"beta", beta},
          {"output_activation", "identity"}};
}

MappedNetwork map_direct(const RandomForest& rf, Activation activation, double beta) {
  MappedNetwork net;
  net.n_features = rf.feature_count();
  net.n_classes = rf.class_count();
  net.activation = activation;
  net.beta = beta;
  const double n_trees = static_cast<double>(rf.tree_count());

  struct Frame {
    NodeIndex node;
    std::vector<std::pair<std::size_t, bool>> path;  // (split neuron, went right)
  };
  for (const auto& tree : rf.trees()) {
    // depth-first, left before right, so leaves appear in left-to-right order
    std::vector<Frame> stack{{tree.root(), {}}};
    while (!stack.empty()) {
      Frame f = std::move(stack.back());
      stack.pop_back();
      if (tree.is_leaf(f.node)) {
        MappedNetwork::LeafNeuron leaf;
        double n_left = 0.0;
        for (const auto& [s, right] : f.path) {
          leaf.inputs.emplace_back(s, right ? 1.0 : -1.0);
          if (!right) n_left += 1.0;
        }
        leaf.bias = n_left - static_cast<double>(f.path.size()) + 0.5;
        for (double p : tree.leaf(f.node).probs) leaf.output_weights.push_back(p / n_trees);
        net.leaves.push_back(std::move(leaf));
        continue;
      }
      const auto& s = tree.split(f.node);
      const std::size_t neuron = net.splits.size();
      net.splits.push_back({s.feature, s.threshold});
      Frame right{s.right, f.path};
      right.path.emplace_back(neuron, true);
      f.path.emplace_back(neuron, false);
      stack.push_back(std::move(right));
      stack.push_back({s.left, std::move(f.path)});
    }
  }
  return net;
}

namespace {

std::size_t dense_size(std::span<const int> sizes) {
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l)
    total += static_cast<std::size_t>(sizes[l]) * static_cast<std::size_t>(sizes[l + 1]) + static_cast<std::size_t>(sizes[l + 1]);
  return total;
}

}  // namespace

std::size_t count_parameters(const MappedNetwork& net) { return dense_size(net.layer_sizes()); }

std::size_t direct_mapping_size(const RandomForest& rf) {
  int splits = 0;
  int leaves = 0;
  for (const auto& t : rf.trees()) {
    splits += static_cast<int>(t.split_count());
    leaves += static_cast<int>(t.leaf_count());
  }
  const std::vector<int> sizes{rf.feature_count(), splits, leaves, rf.class_count()};
  return dense_size(sizes);
}

std::size_t estimate_split_mapping_size(const RandomForest& rf, int block_depth) {
  if (block_depth < 1) throw Error("block depth must be at least 1");
  const auto N = static_cast<std::size_t>(rf.feature_count());
  const auto C = static_cast<std::size_t>(rf.class_count());
  std::size_t total = C;
  for (const auto& tree : rf.trees()) {
    std::vector<NodeIndex> block_roots{tree.root()};
    while (!block_roots.empty()) {
      const NodeIndex root = block_roots.back();
      block_roots.pop_back();
      std::size_t s = 0, real_leaves = 0, cuts = 0;
      std::vector<std::pair<NodeIndex, int>> stack{{root, 0}};
      while (!stack.empty()) {
        const auto [n, d] = stack.back();
        stack.pop_back();
        if (tree.is_leaf(n)) {
          ++real_leaves;
        } else if (d == block_depth) {
          ++cuts;
          block_roots.push_back(n);
        } else {
          ++s;
          stack.emplace_back(tree.split(n).left, d + 1);
          stack.emplace_back(tree.split(n).right, d + 1);
        }
      }
      const std::size_t l = real_leaves + cuts;
      total += s * (N + 1) + l * (s + 1) + real_leaves * C + cuts;
    }
  }
  return total;
}

SplitSizeSweep sweep_split_mapping_size(const RandomForest& rf) {
  int max_depth = 1;
  for (const auto& t : rf.trees()) max_depth = std::max(max_depth, t.depth());
  SplitSizeSweep sweep;
  for (int r = 1; r <= max_depth; ++r) sweep.counts.push_back(estimate_split_mapping_size(rf, r));
  const auto best = std::min_element(sweep.counts.begin(), sweep.counts.end());
  sweep.best_block_depth = static_cast<int>(best - sweep.counts.begin()) + 1;
  sweep.best_count = *best;
  return sweep;
}

}  // namespace nrfi
