#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "nrfi/dataset.hpp"
#include "nrfi/random.hpp"

namespace nrfi {

using NodeIndex = std::int32_t;

/// Axis-aligned split. A sample goes left iff x[feature] < threshold.
struct SplitNode {
  int feature = 0;
  double threshold = 0.0;
  NodeIndex left = -1;
  NodeIndex right = -1;

  friend bool operator==(const SplitNode&, const SplitNode&) = default;
};

struct LeafNode {
  std::vector<double> probs;

  friend bool operator==(const LeafNode&, const LeafNode&) = default;
};

using TreeNode = std::variant<SplitNode, LeafNode>;

class DecisionTree {
 public:
  DecisionTree() = default;
  DecisionTree(std::vector<TreeNode> nodes, NodeIndex root) : nodes_(std::move(nodes)), root_(root) {}

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  const TreeNode& node(NodeIndex i) const { return nodes_[static_cast<std::size_t>(i)]; }
  NodeIndex root() const { return root_; }

  bool is_leaf(NodeIndex i) const { return std::holds_alternative<LeafNode>(node(i)); }
  const SplitNode& split(NodeIndex i) const { return std::get<SplitNode>(node(i)); }
  const LeafNode& leaf(NodeIndex i) const { return std::get<LeafNode>(node(i)); }

  /// Index of the leaf that `x` is routed to.
  NodeIndex route(std::span<const double> x) const;

  std::size_t split_count() const;
  std::size_t leaf_count() const;
  /// Number of split levels on the longest root-to-leaf path (0 for a lone leaf).
  int depth() const;

  /// Throws FormatError unless the nodes form a proper binary tree rooted at
  /// root(), features lie in [0, n_features) and every leaf holds a
  /// distribution over n_classes classes.
  void validate(int n_features, int n_classes) const;

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;

 private:
  std::vector<TreeNode> nodes_;
  NodeIndex root_ = 0;
};

class RandomForest {
 public:
  RandomForest() = default;
  /// Validates every tree against the shared shape.
  RandomForest(std::vector<DecisionTree> trees, int n_features, int n_classes);

  const std::vector<DecisionTree>& trees() const { return trees_; }
  std::size_t tree_count() const { return trees_.size(); }
  int feature_count() const { return n_features_; }
  int class_count() const { return n_classes_; }

  friend bool operator==(const RandomForest&, const RandomForest&) = default;

 private:
  std::vector<DecisionTree> trees_;
  int n_features_ = 0;
  int n_classes_ = 0;
};

/// Feature subset size per node.
struct MaxFeatures {
  enum class Kind { Sqrt, All, Count };
  Kind kind = Kind::Sqrt;
  int count = 0;

  static MaxFeatures sqrt() { return {Kind::Sqrt, 0}; }
  static MaxFeatures all() { return {Kind::All, 0}; }
  static MaxFeatures exactly(int n) { return {Kind::Count, n}; }

  /// Resolved subset size for n_features, clamped to [1, n_features].
  int resolve(int n_features) const;
};

struct TreeTrainParams {
  std::optional<int> max_depth;  // unlimited when empty
  int min_samples_split = 2;
  MaxFeatures max_features = MaxFeatures::sqrt();
  bool bootstrap = true;
};

/// Greedy CART with Gini impurity. At every node a random subset of
/// max_features features is searched; candidate thresholds are midpoints of
/// consecutive distinct values. Ties go to the lowest feature index, then
/// the lowest threshold. If no sampled feature is splittable the remaining
/// features are searched before giving up.
DecisionTree train_tree(const Dataset& ds, const TreeTrainParams& params, Rng& rng);

/// Same as train_tree, restricted to the given rows (duplicates count as
/// extra weight, which is how bootstrap samples enter).
DecisionTree train_tree(const Dataset& ds, std::span<const std::size_t> rows, const TreeTrainParams& params, Rng& rng);

/// Tree i draws from Rng(derive_seed(seed, i)): its bootstrap sample (when
/// enabled) and then its feature subsets.
RandomForest train_forest(const Dataset& ds, int n_trees, const TreeTrainParams& params, std::uint64_t seed);

std::span<const double> predict_tree(const DecisionTree& tree, std::span<const double> x);

/// Mean of the per-tree distributions, accumulated in tree order as
/// sum_t (p_t / n_T).
std::vector<double> predict_forest(const RandomForest& rf, std::span<const double> x);
void predict_forest_into(const RandomForest& rf, std::span<const double> x, std::span<double> out);

/// Index of the largest entry; the lowest index wins ties.
int argmax(std::span<const double> v);

/// W(n) for every node of one tree: the leaf distribution at leaves and the
/// sum of both children at splits.
struct ClassWeights {
  std::vector<std::vector<double>> per_node;

  std::span<const double> at(NodeIndex n) const { return per_node[static_cast<std::size_t>(n)]; }
};

ClassWeights compute_class_weights(const DecisionTree& tree, int n_classes);

nlohmann::json to_json(const RandomForest& rf);
RandomForest forest_from_json(const nlohmann::json& j);
void save_forest(const RandomForest& rf, const std::filesystem::path& path);
RandomForest load_forest(const std::filesystem::path& path);

}  // namespace nrfi
