#include <fstream>

#include <nlohmann/json.hpp>

#include "nrfi/error.hpp"
#include "nrfi/forest.hpp"

namespace nrfi {

nlohmann::json to_json(const RandomForest& rf) {
  auto trees = nlohmann::json::array();
  for (const auto& tree : rf.trees()) {
    auto nodes = nlohmann::json::array();
    for (const auto& node : tree.nodes()) {
      if (const auto* s = std::get_if<SplitNode>(&node))
        nodes.push_back({{"split", {{"feature", s->feature}, {"threshold", s->threshold}, {"left", s->left}, {"right", s->right}}}});
      else
        nodes.push_back({{"leaf", {{"probs", std::get<LeafNode>(node).probs}}}});
    }
    trees.push_back({{"nodes", std::move(nodes)}, {"root", tree.root()}});
  }
  return {{"n_features", rf.feature_count()}, {"n_classes", rf.class_count()}, {"trees", std::move(trees)}};
}

RandomForest forest_from_json(const nlohmann::json& j) {
  try {
    const int n_features = j.at("n_features").get<int>();
    const int n_classes = j.at("n_classes").get<int>();
    std::vector<DecisionTree> trees;
    for (const auto& jt : j.at("trees")) {
      std::vector<TreeNode> nodes;
      for (const auto& jn : jt.at("nodes")) {
        if (jn.contains("split")) {
          const auto& js = jn.at("split");
          nodes.emplace_back(SplitNode{js.at("feature").get<int>(), js.at("threshold").get<double>(),
                                       js.at("left").get<NodeIndex>(), js.at("right").get<NodeIndex>()});
        } else if (jn.contains("leaf")) {
          nodes.emplace_back(LeafNode{jn.at("leaf").at("probs").get<std::vector<double>>()});
        } else {
          throw FormatError("tree node is neither a split nor a leaf");
        }
      }
      trees.emplace_back(std::move(nodes), jt.at("root").get<NodeIndex>());
    }
    return RandomForest(std::move(trees), n_features, n_classes);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed forest: ") + e.what());
  }
}

void save_forest(const RandomForest& rf, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << to_json(rf).dump() << '\n';
}

RandomForest load_forest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open forest file: " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("cannot parse " + path.string() + ": " + e.what());
  }
  return forest_from_json(j);
}

}  // namespace nrfi
