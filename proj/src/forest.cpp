#include "nrfi/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nrfi/error.hpp"

namespace nrfi {

NodeIndex DecisionTree::route(std::span<const double> x) const {
  NodeIndex n = root_;
  while (const auto* s = std::get_if<SplitNode>(&node(n))) n = x[static_cast<std::size_t>(s->feature)] < s->threshold ? s->left : s->right;
  return n;
}

std::size_t DecisionTree::split_count() const {
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return std::holds_alternative<SplitNode>(n); }));
}

std::size_t DecisionTree::leaf_count() const { return nodes_.size() - split_count(); }

int DecisionTree::depth() const {
  int deepest = 0;
  std::vector<std::pair<NodeIndex, int>> stack{{root_, 0}};
  while (!stack.empty()) {
    const auto [n, d] = stack.back();
    stack.pop_back();
    if (const auto* s = std::get_if<SplitNode>(&node(n))) {
      stack.emplace_back(s->left, d + 1);
      stack.emplace_back(s->right, d + 1);
    } else {
      deepest = std::max(deepest, d);
    }
  }
  return deepest;
}

void DecisionTree::validate(int n_features, int n_classes) const {
  const auto n_nodes = static_cast<NodeIndex>(nodes_.size());
  if (n_nodes == 0) throw FormatError("tree has no nodes");
  if (root_ < 0 || root_ >= n_nodes) throw FormatError("tree root index " + std::to_string(root_) + " out of range");

  std::vector<int> visits(nodes_.size(), 0);
  std::vector<NodeIndex> stack{root_};
  while (!stack.empty()) {
    const NodeIndex n = stack.back();
    stack.pop_back();
    if (n < 0 || n >= n_nodes) throw FormatError("child index " + std::to_string(n) + " out of range");
    if (++visits[static_cast<std::size_t>(n)] > 1) throw FormatError("node " + std::to_string(n) + " is reachable more than once");
    std::visit(
        [&](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, SplitNode>) {
            if (v.feature < 0 || v.feature >= n_features)
              throw FormatError("split feature " + std::to_string(v.feature) + " outside [0, " + std::to_string(n_features) + ")");
            if (!std::isfinite(v.threshold)) throw FormatError("split threshold is not finite");
            stack.push_back(v.left);
            stack.push_back(v.right);
          } else {
            if (static_cast<int>(v.probs.size()) != n_classes)
              throw FormatError("leaf has " + std::to_string(v.probs.size()) + " class probabilities, expected " + std::to_string(n_classes));
            double sum = 0.0;
            for (double p : v.probs) {
              if (!(p >= 0.0)) throw FormatError("leaf probability is negative or NaN");
              sum += p;
            }
            if (std::abs(sum - 1.0) > 1e-9) throw FormatError("leaf probabilities sum to " + std::to_string(sum) + ", not 1");
          }
        },
        nodes_[static_cast<std::size_t>(n)]);
  }
  if (std::find(visits.begin(), visits.end(), 0) != visits.end()) throw FormatError("tree contains nodes unreachable from the root");
}

RandomForest::RandomForest(std::vector<DecisionTree> trees, int n_features, int n_classes)
    : trees_(std::move(trees)), n_features_(n_features), n_classes_(n_classes) {
  if (trees_.empty()) throw FormatError("a forest needs at least one tree");
  if (n_features < 1) throw FormatError("a forest needs at least one feature");
  if (n_classes < 2) throw FormatError("a forest needs at least two classes");
  for (std::size_t t = 0; t < trees_.size(); ++t) {
    try {
      trees_[t].validate(n_features, n_classes);
    } catch (const FormatError& e) {
      throw FormatError("tree " + std::to_string(t) + ": " + e.what());
    }
  }
}

int MaxFeatures::resolve(int n_features) const {
  int k = n_features;
  switch (kind) {
    case Kind::Sqrt: k = static_cast<int>(std::floor(std::sqrt(static_cast<double>(n_features)))); break;
    case Kind::All: k = n_features; break;
    case Kind::Count: k = count; break;
  }
  return std::clamp(k, 1, n_features);
}

namespace {

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double score = -1.0;  // sum over children of (sum_c n_c^2) / n; larger is purer
};

class TreeBuilder {
 public:
  TreeBuilder(const Dataset& ds, const TreeTrainParams& params, Rng& rng)
      : ds_(ds), params_(params), rng_(rng), n_classes_(ds.class_count), n_features_(ds.feature_count()),
        subset_size_(params.max_features.resolve(ds.feature_count())) {}

  DecisionTree build(std::vector<std::size_t> rows) {
    grow(rows, 0);
    return DecisionTree(std::move(nodes_), 0);
  }

 private:
  NodeIndex grow(std::vector<std::size_t>& rows, int depth) {
    std::vector<double> counts(static_cast<std::size_t>(n_classes_), 0.0);
    for (auto r : rows) counts[static_cast<std::size_t>(ds_.labels[r])] += 1.0;
    const bool pure = std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0.0; }) <= 1;
    const bool depth_reached = params_.max_depth && depth >= *params_.max_depth;

    const auto self = static_cast<NodeIndex>(nodes_.size());
    nodes_.emplace_back(LeafNode{});

    std::optional<SplitChoice> choice;
    if (!pure && !depth_reached && static_cast<int>(rows.size()) >= params_.min_samples_split) choice = find_split(rows);
    if (!choice) {
      const double n = static_cast<double>(rows.size());
      for (auto& c : counts) c /= n;
      nodes_[static_cast<std::size_t>(self)] = LeafNode{std::move(counts)};
      return self;
    }

    const auto f = static_cast<Eigen::Index>(choice->feature);
    std::vector<std::size_t> left, right;
    for (auto r : rows) (ds_.features(static_cast<Eigen::Index>(r), f) < choice->threshold ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();

    const NodeIndex l = grow(left, depth + 1);
    const NodeIndex r = grow(right, depth + 1);
    nodes_[static_cast<std::size_t>(self)] = SplitNode{choice->feature, choice->threshold, l, r};
    return self;
  }

  std::optional<SplitChoice> find_split(const std::vector<std::size_t>& rows) {
    std::vector<int> order(static_cast<std::size_t>(n_features_));
    std::iota(order.begin(), order.end(), 0);
    // partial Fisher-Yates: first subset_size_ entries are the sampled features
    for (int i = 0; i < subset_size_; ++i) {
      const auto j = static_cast<std::size_t>(i) + rng_.index(order.size() - static_cast<std::size_t>(i));
      std::swap(order[static_cast<std::size_t>(i)], order[j]);
    }
    const auto cut = order.begin() + subset_size_;
    std::sort(order.begin(), cut);
    std::sort(cut, order.end());

    SplitChoice best;
    for (auto it = order.begin(); it != order.end(); ++it) {
      if (it == cut && best.feature >= 0) break;
      evaluate_feature(rows, *it, best);
    }
    if (best.feature < 0) return std::nullopt;
    return best;
  }

  void evaluate_feature(const std::vector<std::size_t>& rows, int feature, SplitChoice& best) {
    const auto f = static_cast<Eigen::Index>(feature);
    sorted_.clear();
    for (auto r : rows) sorted_.emplace_back(ds_.features(static_cast<Eigen::Index>(r), f), ds_.labels[r]);
    std::sort(sorted_.begin(), sorted_.end());
    if (sorted_.front().first == sorted_.back().first) return;

    const auto C = static_cast<std::size_t>(n_classes_);
    left_counts_.assign(C, 0.0);
    right_counts_.assign(C, 0.0);
    for (const auto& [v, label] : sorted_) right_counts_[static_cast<std::size_t>(label)] += 1.0;
    double left_sq = 0.0;
    double right_sq = 0.0;
    for (double c : right_counts_) right_sq += c * c;

    const double n = static_cast<double>(sorted_.size());
    for (std::size_t i = 0; i + 1 < sorted_.size(); ++i) {
      const auto label = static_cast<std::size_t>(sorted_[i].second);
      // incremental update of the squared class counts
      left_sq += 2.0 * left_counts_[label] + 1.0;
      right_sq -= 2.0 * right_counts_[label] - 1.0;
      left_counts_[label] += 1.0;
      right_counts_[label] -= 1.0;

      const double lo = sorted_[i].first;
      const double hi = sorted_[i + 1].first;
      if (lo == hi) continue;
      const double n_left = static_cast<double>(i + 1);
      const double score = left_sq / n_left + right_sq / (n - n_left);
      if (score > best.score) {
        double threshold = lo + (hi - lo) / 2.0;
        if (!(threshold > lo)) threshold = hi;
        best = {feature, threshold, score};
      }
    }
  }

  const Dataset& ds_;
  const TreeTrainParams& params_;
  Rng& rng_;
  int n_classes_;
  int n_features_;
  int subset_size_;
  std::vector<TreeNode> nodes_;
  std::vector<std::pair<double, int>> sorted_;
  std::vector<double> left_counts_;
  std::vector<double> right_counts_;
};

}  // namespace

DecisionTree train_tree(const Dataset& ds, std::span<const std::size_t> rows, const TreeTrainParams& params, Rng& rng) {
  if (rows.empty()) throw DataError("cannot train a tree on an empty dataset");
  if (params.max_depth && *params.max_depth < 1) throw DataError("max_depth must be at least 1");
  ds.validate();
  return TreeBuilder(ds, params, rng).build({rows.begin(), rows.end()});
}

DecisionTree train_tree(const Dataset& ds, const TreeTrainParams& params, Rng& rng) {
  std::vector<std::size_t> rows(ds.size());
  std::iota(rows.begin(), rows.end(), 0);
  return train_tree(ds, rows, params, rng);
}

RandomForest train_forest(const Dataset& ds, int n_trees, const TreeTrainParams& params, std::uint64_t seed) {
  if (n_trees < 1) throw DataError("a forest needs at least one tree");
  if (ds.size() == 0) throw DataError("cannot train a forest on an empty dataset");
  std::vector<DecisionTree> trees;
  trees.reserve(static_cast<std::size_t>(n_trees));
  std::vector<std::size_t> rows(ds.size());
  for (int t = 0; t < n_trees; ++t) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    if (params.bootstrap)
      for (auto& r : rows) r = rng.index(ds.size());
    else
      std::iota(rows.begin(), rows.end(), 0);
    trees.push_back(train_tree(ds, rows, params, rng));
  }
  return RandomForest(std::move(trees), ds.feature_count(), ds.class_count);
}

std::span<const double> predict_tree(const DecisionTree& tree, std::span<const double> x) {
  return tree.leaf(tree.route(x)).probs;
}

void predict_forest_into(const RandomForest& rf, std::span<const double> x, std::span<double> out) {
  if (static_cast<int>(x.size()) != rf.feature_count())
    throw DimensionError("forest expects " + std::to_string(rf.feature_count()) + " features, got " + std::to_string(x.size()));
  std::fill(out.begin(), out.end(), 0.0);
  const double n_trees = static_cast<double>(rf.tree_count());
  for (const auto& tree : rf.trees()) {
    const auto p = predict_tree(tree, x);
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += p[c] / n_trees;
  }
}

std::vector<double> predict_forest(const RandomForest& rf, std::span<const double> x) {
  std::vector<double> out(static_cast<std::size_t>(rf.class_count()));
  predict_forest_into(rf, x, out);
  return out;
}

int argmax(std::span<const double> v) {
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

ClassWeights compute_class_weights(const DecisionTree& tree, int n_classes) {
  ClassWeights w;
  w.per_node.assign(tree.nodes().size(), std::vector<double>(static_cast<std::size_t>(n_classes), 0.0));
  // iterative post-order: a node is finalized after both children
  std::vector<std::pair<NodeIndex, bool>> stack{{tree.root(), false}};
  while (!stack.empty()) {
    const auto [n, children_done] = stack.back();
    stack.pop_back();
    auto& wn = w.per_node[static_cast<std::size_t>(n)];
    if (tree.is_leaf(n)) {
      wn = tree.leaf(n).probs;
    } else if (!children_done) {
      const auto& s = tree.split(n);
      stack.emplace_back(n, true);
      stack.emplace_back(s.right, false);
      stack.emplace_back(s.left, false);
    } else {
      const auto& s = tree.split(n);
      const auto& wl = w.per_node[static_cast<std::size_t>(s.left)];
      const auto& wr = w.per_node[static_cast<std::size_t>(s.right)];
      for (std::size_t c = 0; c < wn.size(); ++c) wn[c] = wl[c] + wr[c];
    }
  }
  return w;
}

}  // namespace nrfi
