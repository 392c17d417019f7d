#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "nrfi/forest.hpp"

namespace nrfi {

enum class Activation {
  Step,     // right-closed indicator: 1 iff z >= 0
  Sigmoid,  // 1 / (1 + exp(-beta * z))
};

Activation parse_activation(std::string_view name);
std::string_view to_string(Activation a);

/// Two-hidden-layer network equivalent to a forest: one neuron per split
/// node, one per leaf, and a linear output layer averaging leaf
/// distributions. Stored sparsely; the dense form it stands for has layer
/// sizes [N, sum splits, sum leaves, C] and all structural zeros counted.
struct MappedNetwork {
  /// Layer 1 neuron: weight 1 on `feature`, bias -threshold, so it fires iff
  /// x[feature] >= threshold.
  struct SplitNeuron {
    int feature = 0;
    double threshold = 0.0;
  };
  /// Layer 2 neuron: +1 from each ancestor split whose right branch leads
  /// here, -1 from each whose left branch does, and bias
  /// (#left ancestors) - (path length) + 0.5. It fires iff every split on the
  /// path routes towards this leaf.
  struct LeafNeuron {
    std::vector<std::pair<std::size_t, double>> inputs;
    double bias = 0.0;
    /// Output-layer weights: the leaf distribution scaled by 1 / n_T.
    std::vector<double> output_weights;
  };

  int n_features = 0;
  int n_classes = 0;
  Activation activation = Activation::Step;
  double beta = 1e4;
  std::vector<SplitNeuron> splits;
  std::vector<LeafNeuron> leaves;

  std::vector<int> layer_sizes() const;
  std::vector<double> forward(std::span<const double> x) const;

  /// Dense weights and biases in the same JSON layout as a saved Mlp, plus
  /// "activation", "beta" and "output_activation" fields.
  nlohmann::json to_dense_json() const;
};

MappedNetwork map_direct(const RandomForest& rf, Activation activation = Activation::Step, double beta = 1e4);

/// Weights plus biases of the dense network, structural zeros included.
std::size_t count_parameters(const MappedNetwork& net);

/// Dense direct-mapping size computed from tree shapes alone.
std::size_t direct_mapping_size(const RandomForest& rf);

/// Parameter count of the subtree-splitting construction with blocks of at
/// most `block_depth` split levels. Each block is a small direct mapping
/// (s splits, l block leaves: s(N+1) + l(s+1) weights), each block leaf that
/// is a real leaf feeds C output weights, each block leaf that is cut gates
/// its child block with one weight, plus C shared output biases.
std::size_t estimate_split_mapping_size(const RandomForest& rf, int block_depth);

struct SplitSizeSweep {
  /// counts[r - 1] is the estimate for block depth r, r in [1, max depth].
  std::vector<std::size_t> counts;
  int best_block_depth = 1;
  std::size_t best_count = 0;
};

SplitSizeSweep sweep_split_mapping_size(const RandomForest& rf);

}  // namespace nrfi
