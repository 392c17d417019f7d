#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "nrfi/datagen.hpp"
#include "nrfi/dataset.hpp"
#include "nrfi/forest.hpp"
#include "nrfi/imitation.hpp"
#include "nrfi/mapping.hpp"
#include "nrfi/mlp.hpp"

namespace nrfi {

/// Where the training data comes from: a CSV file, or a synthetic kind when
/// `csv` is empty.
struct DataSource {
  std::string csv;
  std::string label_column = "label";
  std::string synthetic = "blobs";
  std::size_t samples = 600;
  int features = 2;
  int classes = 2;
  double noise = 0.5;
};

/// Every knob of a pipeline run. Component seeds are derived from `seed` by
/// resolve_seeds() so a single number pins the whole run.
struct RunConfig {
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  DataSource data;
  SplitFractions split;
  std::optional<int> n_limit;

  int n_trees = 25;
  TreeTrainParams tree;

  GenerationConfig generation;
  /// When set, p_zero is taken from the zero fraction of the training data.
  bool p_zero_from_data = true;
  std::size_t generate_samples = 1000;
  int histogram_bins = 20;

  TrainConfig training;
  std::vector<int> hidden{32, 32};
  std::vector<std::vector<int>> compare_hidden{{8, 8}, {32, 32}, {64, 64}};
  ImitationOptions imitation;

  Activation map_activation = Activation::Step;
  double map_beta = 1e4;

  std::uint64_t split_seed() const;
  std::uint64_t limit_seed() const;
  std::uint64_t synthetic_seed() const;
  std::uint64_t forest_seed() const;

  /// Writes derived seeds into generation.seed and training.seed.
  void resolve_seeds();
};

nlohmann::json to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

/// FNV-1a 64 of the compact JSON dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& j);

/// Hidden-layer list such as "32,32"; an empty string means no hidden layer.
std::vector<int> parse_hidden_sizes(const std::string& text);
std::string format_hidden_sizes(const std::vector<int>& hidden);

}  // namespace nrfi
