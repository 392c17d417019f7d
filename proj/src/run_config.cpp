#include "nrfi/run_config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "nrfi/error.hpp"

namespace nrfi {

namespace {

enum SeedStream : std::uint64_t { kSplit = 1, kLimit, kSynthetic, kForest, kGeneration, kTraining };

nlohmann::json tree_params_json(const TreeTrainParams& p) {
  nlohmann::json mf;
  switch (p.max_features.kind) {
    case MaxFeatures::Kind::Sqrt: mf = "sqrt"; break;
    case MaxFeatures::Kind::All: mf = "all"; break;
    case MaxFeatures::Kind::Count: mf = p.max_features.count; break;
  }
  return {{"max_depth", p.max_depth ? nlohmann::json(*p.max_depth) : nlohmann::json(nullptr)},
          {"min_samples_split", p.min_samples_split},
          {"max_features", mf},
          {"bootstrap", p.bootstrap}};
}

TreeTrainParams tree_params_from_json(const nlohmann::json& j) {
  TreeTrainParams p;
  if (j.contains("max_depth") && !j["max_depth"].is_null()) p.max_depth = j["max_depth"].get<int>();
  p.min_samples_split = j.value("min_samples_split", p.min_samples_split);
  p.bootstrap = j.value("bootstrap", p.bootstrap);
  if (j.contains("max_features")) {
    const auto& mf = j["max_features"];
    if (mf.is_number_integer())
      p.max_features = MaxFeatures::exactly(mf.get<int>());
    else if (mf == "sqrt")
      p.max_features = MaxFeatures::sqrt();
    else if (mf == "all")
      p.max_features = MaxFeatures::all();
    else
      throw FormatError("max_features must be an integer, \"sqrt\" or \"all\"");
  }
  return p;
}

}  // namespace

std::uint64_t RunConfig::split_seed() const { return derive_seed(seed, kSplit); }
std::uint64_t RunConfig::limit_seed() const { return derive_seed(seed, kLimit); }
std::uint64_t RunConfig::synthetic_seed() const { return derive_seed(seed, kSynthetic); }
std::uint64_t RunConfig::forest_seed() const { return derive_seed(seed, kForest); }

void RunConfig::resolve_seeds() {
  generation.seed = derive_seed(seed, kGeneration);
  training.seed = derive_seed(seed, kTraining);
}

nlohmann::json to_json(const RunConfig& cfg) {
  return {
      {"seed", cfg.seed},
      {"output_dir", cfg.output_dir},
      {"data",
       {{"csv", cfg.data.csv},
        {"label_column", cfg.data.label_column},
        {"synthetic", cfg.data.synthetic},
        {"samples", cfg.data.samples},
        {"features", cfg.data.features},
        {"classes", cfg.data.classes},
        {"noise", cfg.data.noise}}},
      {"split", {cfg.split.train, cfg.split.validation, cfg.split.test}},
      {"n_limit", cfg.n_limit ? nlohmann::json(*cfg.n_limit) : nlohmann::json(nullptr)},
      {"n_trees", cfg.n_trees},
      {"tree", tree_params_json(cfg.tree)},
      {"generation", to_json(cfg.generation)},
      {"p_zero_from_data", cfg.p_zero_from_data},
      {"generate_samples", cfg.generate_samples},
      {"histogram_bins", cfg.histogram_bins},
      {"training", to_json(cfg.training)},
      {"hidden", cfg.hidden},
      {"compare_hidden", cfg.compare_hidden},
      {"imitation",
       {{"pool_size", cfg.imitation.pool_size}, {"probe_size", cfg.imitation.probe_size}, {"hard_labels", cfg.imitation.hard_labels}}},
      {"map", {{"mode", cfg.map_activation == Activation::Step ? "hard" : "soft"}, {"beta", cfg.map_beta}}},
  };
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig cfg;
  try {
    cfg.seed = j.value("seed", cfg.seed);
    cfg.output_dir = j.value("output_dir", cfg.output_dir);
    if (j.contains("data")) {
      const auto& d = j["data"];
      cfg.data.csv = d.value("csv", cfg.data.csv);
      cfg.data.label_column = d.value("label_column", cfg.data.label_column);
      cfg.data.synthetic = d.value("synthetic", cfg.data.synthetic);
      cfg.data.samples = d.value("samples", cfg.data.samples);
      cfg.data.features = d.value("features", cfg.data.features);
      cfg.data.classes = d.value("classes", cfg.data.classes);
      cfg.data.noise = d.value("noise", cfg.data.noise);
    }
    if (j.contains("split")) {
      const auto s = j["split"].get<std::vector<double>>();
      if (s.size() != 3) throw FormatError("split must list three fractions");
      cfg.split = {s[0], s[1], s[2]};
    }
    if (j.contains("n_limit") && !j["n_limit"].is_null()) cfg.n_limit = j["n_limit"].get<int>();
    cfg.n_trees = j.value("n_trees", cfg.n_trees);
    if (j.contains("tree")) cfg.tree = tree_params_from_json(j["tree"]);
    if (j.contains("generation")) cfg.generation = generation_config_from_json(j["generation"]);
    cfg.p_zero_from_data = j.value("p_zero_from_data", cfg.p_zero_from_data);
    cfg.generate_samples = j.value("generate_samples", cfg.generate_samples);
    cfg.histogram_bins = j.value("histogram_bins", cfg.histogram_bins);
    if (j.contains("training")) cfg.training = train_config_from_json(j["training"]);
    if (j.contains("hidden")) cfg.hidden = j["hidden"].get<std::vector<int>>();
    if (j.contains("compare_hidden")) cfg.compare_hidden = j["compare_hidden"].get<std::vector<std::vector<int>>>();
    if (j.contains("imitation")) {
      const auto& im = j["imitation"];
      cfg.imitation.pool_size = im.value("pool_size", cfg.imitation.pool_size);
      cfg.imitation.probe_size = im.value("probe_size", cfg.imitation.probe_size);
      cfg.imitation.hard_labels = im.value("hard_labels", cfg.imitation.hard_labels);
    }
    if (j.contains("map")) {
      cfg.map_activation = parse_activation(j["map"].value("mode", std::string("hard")));
      cfg.map_beta = j["map"].value("beta", cfg.map_beta);
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed run config: ") + e.what());
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file: " + path.string());
  try {
    return run_config_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("cannot parse " + path.string() + ": " + e.what());
  }
}

std::string config_hash(const nlohmann::json& j) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : j.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<int> parse_hidden_sizes(const std::string& text) {
  std::vector<int> sizes;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    int v = 0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc() || ptr != item.data() + item.size() || v < 1)
      throw Error("invalid hidden layer size '" + item + "' in '" + text + "'");
    sizes.push_back(v);
  }
  return sizes;
}

std::string format_hidden_sizes(const std::vector<int>& hidden) {
  std::string out;
  for (std::size_t i = 0; i < hidden.size(); ++i) out += (i ? "," : "") + std::to_string(hidden[i]);
  return out;
}

}  // namespace nrfi
