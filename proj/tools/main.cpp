#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"
#include "nrfi/error.hpp"

namespace {

using nrfi::RunConfig;

// Flag values that override the config file when given.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::optional<std::string> out;

  // data and forest
  std::optional<std::string> data, label_column, synthetic, max_features;
  std::optional<std::size_t> samples;
  std::optional<int> features, classes, n_limit, trees, max_depth, min_samples_split;
  std::optional<double> noise;
  bool no_bootstrap = false;

  // generation
  bool no_pw = false, no_dts = false;
  std::optional<double> c_std, p_zero, w_path, p_forest;
  std::optional<std::size_t> gen_samples;
  std::optional<int> bins;

  // training
  std::optional<std::string> arch, archs;
  std::optional<double> lr, momentum;
  std::optional<int> batch_size, steps, epochs;
  std::optional<std::size_t> pool_size, probe_size;
  bool hard_labels = false;

  // mapping
  std::optional<std::string> mode;
  std::optional<double> beta;

  RunConfig resolve() const {
    RunConfig cfg = config.empty() ? RunConfig{} : nrfi::load_run_config(config);
    if (seed) cfg.seed = *seed;
    if (out) cfg.output_dir = *out;

    if (data) cfg.data.csv = *data;
    if (label_column) cfg.data.label_column = *label_column;
    if (synthetic) cfg.data.synthetic = *synthetic;
    if (samples) cfg.data.samples = *samples;
    if (features) cfg.data.features = *features;
    if (classes) cfg.data.classes = *classes;
    if (noise) cfg.data.noise = *noise;
    if (n_limit) cfg.n_limit = *n_limit;
    if (trees) cfg.n_trees = *trees;
    if (max_depth) cfg.tree.max_depth = *max_depth;
    if (min_samples_split) cfg.tree.min_samples_split = *min_samples_split;
    if (max_features) {
      if (*max_features == "sqrt")
        cfg.tree.max_features = nrfi::MaxFeatures::sqrt();
      else if (*max_features == "all")
        cfg.tree.max_features = nrfi::MaxFeatures::all();
      else {
        const auto n = nrfi::parse_hidden_sizes(*max_features);
        if (n.size() != 1) throw nrfi::Error("--max-features must be sqrt, all or a positive count");
        cfg.tree.max_features = nrfi::MaxFeatures::exactly(n[0]);
      }
    }
    if (no_bootstrap) cfg.tree.bootstrap = false;

    if (no_pw) cfg.generation.use_pw = false;
    if (no_dts) cfg.generation.use_dts = false;
    if (c_std) cfg.generation.c_std = *c_std;
    if (p_zero) {
      cfg.generation.p_zero = *p_zero;
      cfg.p_zero_from_data = false;
    }
    if (w_path) cfg.generation.fixed_w_path = *w_path;
    if (p_forest) cfg.generation.fixed_p_forest = *p_forest;
    if (gen_samples) cfg.generate_samples = *gen_samples;
    if (bins) cfg.histogram_bins = *bins;

    if (arch) cfg.hidden = nrfi::parse_hidden_sizes(*arch);
    if (archs) {
      cfg.compare_hidden.clear();
      std::stringstream ss(*archs);
      std::string item;
      while (std::getline(ss, item, ';')) cfg.compare_hidden.push_back(nrfi::parse_hidden_sizes(item));
    }
    if (lr) cfg.training.learning_rate = *lr;
    if (momentum) cfg.training.momentum = *momentum;
    if (batch_size) cfg.training.batch_size = *batch_size;
    if (steps) cfg.training.steps_per_epoch = *steps;
    if (epochs) cfg.training.epochs = *epochs;
    if (pool_size) cfg.imitation.pool_size = *pool_size;
    if (probe_size) cfg.imitation.probe_size = *probe_size;
    if (hard_labels) cfg.imitation.hard_labels = true;

    if (mode) cfg.map_activation = nrfi::parse_activation(*mode);
    if (beta) cfg.map_beta = *beta;

    cfg.resolve_seeds();
    cfg.generation.validate();
    cfg.training.validate();
    return cfg;
  }
};

void add_input_paths(CLI::App* cmd, nrfi::cli::ArtifactPaths& in) {
  cmd->add_option("--forest", in.forest, "Forest file (default <out>/forest.json)");
  cmd->add_option("--stats", in.stats, "Feature statistics (default <out>/stats.json)");
  cmd->add_option("--test", in.test, "Labeled test CSV (default <out>/test.csv)");
}

void add_generation(CLI::App* cmd, Overrides& o) {
  cmd->add_flag("--no-pw", o.no_pw, "Disable path weighting");
  cmd->add_flag("--no-dts", o.no_dts, "Disable decision tree subsets");
  cmd->add_option("--c-std", o.c_std, "Std multiplier of the initial draw");
  cmd->add_option("--p-zero", o.p_zero, "Zeroing probability (default: zero fraction of the training data)");
  cmd->add_option("--w-path", o.w_path, "Fix w_path instead of drawing it");
  cmd->add_option("--p-forest", o.p_forest, "Fix p_forest instead of drawing it");
}

void add_training(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--lr", o.lr, "Learning rate");
  cmd->add_option("--momentum", o.momentum, "Momentum");
  cmd->add_option("--batch-size", o.batch_size, "Batch size");
  cmd->add_option("--steps", o.steps, "Steps per epoch");
  cmd->add_option("--epochs", o.epochs, "Epochs");
  cmd->add_option("--pool-size", o.pool_size, "Generated samples held out for model selection");
  cmd->add_option("--probe-size", o.probe_size, "Generated probe points for fidelity");
  cmd->add_flag("--hard-labels", o.hard_labels, "Train on one-hot forest argmax instead of probabilities");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Turn random forests into compact neural networks by imitation", "nrfi"};
  app.require_subcommand(1);
  app.fallthrough();

  Overrides o;
  app.add_option("--seed", o.seed, "Run seed; every component seed derives from it");
  app.add_option("--config", o.config, "Run config JSON")->check(CLI::ExistingFile);
  app.add_option("--out", o.out, "Output directory");

  nrfi::cli::GenerateOptions gen_opts;
  nrfi::cli::ArtifactPaths imitate_in, compare_in;
  nrfi::cli::MapOptions map_opts;
  nrfi::cli::EvalOptions eval_opts;

  auto* train = app.add_subcommand("train-forest", "Split the data, train a forest, write forest/stats/metrics");
  train->add_option("--data", o.data, "Input CSV (synthetic data when omitted)");
  train->add_option("--label-column", o.label_column, "Label column name");
  train->add_option("--synthetic", o.synthetic, "blobs, two_moons or xor_grid");
  train->add_option("--samples", o.samples, "Synthetic sample count");
  train->add_option("--features", o.features, "Synthetic feature count");
  train->add_option("--classes", o.classes, "Synthetic class count");
  train->add_option("--noise", o.noise, "Synthetic noise level");
  train->add_option("--n-limit", o.n_limit, "Training samples kept per class");
  train->add_option("--trees", o.trees, "Number of trees");
  train->add_option("--max-depth", o.max_depth, "Maximum tree depth");
  train->add_option("--min-samples-split", o.min_samples_split, "Minimum node size to split");
  train->add_option("--max-features", o.max_features, "sqrt, all or a count");
  train->add_flag("--no-bootstrap", o.no_bootstrap, "Train every tree on the full training split");

  auto* gen = app.add_subcommand("generate", "Generate samples from a forest plus a confidence histogram");
  add_input_paths(gen, gen_opts.in);
  add_generation(gen, o);
  gen->add_option("--samples", o.gen_samples, "Samples to generate");
  gen->add_option("--bins", o.bins, "Histogram bins");
  gen->add_option("--format", gen_opts.format, "csv or bin")->check(CLI::IsMember({"csv", "bin"}));

  auto* imit = app.add_subcommand("imitate", "Train a student network on generated data");
  add_input_paths(imit, imitate_in);
  add_generation(imit, o);
  add_training(imit, o);
  imit->add_option("--arch", o.arch, "Hidden sizes, e.g. 32,32");

  auto* map = app.add_subcommand("map", "Direct tree-to-network mapping and size report");
  map->add_option("--forest", map_opts.in.forest, "Forest file (default <out>/forest.json)");
  map->add_option("--mode", o.mode, "hard or soft")->check(CLI::IsMember({"hard", "soft"}));
  map->add_option("--beta", o.beta, "Sigmoid sharpness in soft mode");
  map->add_flag("--size-only", map_opts.size_only, "Write the size report only");

  auto* cmp = app.add_subcommand("compare", "Forest, students and mappings: accuracy, fidelity, size");
  add_input_paths(cmp, compare_in);
  add_generation(cmp, o);
  add_training(cmp, o);
  cmp->add_option("--archs", o.archs, "Student architectures, e.g. \"8,8;32,32;64,64\"");

  auto* ev = app.add_subcommand("eval", "Accuracy (and fidelity) of a saved model on a labeled CSV");
  ev->add_option("--model", eval_opts.model, "forest.json or student.json")->required();
  ev->add_option("--data", eval_opts.data, "Labeled CSV (default <out>/test.csv)");
  ev->add_option("--label-column", o.label_column, "Label column of --data");
  ev->add_option("--forest", eval_opts.in.forest, "Teacher forest for fidelity (default <out>/forest.json)");
  ev->add_option("--stats", eval_opts.in.stats, "Feature statistics (default <out>/stats.json)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return e.get_exit_code() != 0 ? e.get_exit_code() : 2;
  }

  try {
    const RunConfig cfg = o.resolve();
    if (*train) nrfi::cli::train_forest(cfg);
    if (*gen) nrfi::cli::generate(cfg, gen_opts);
    if (*imit) nrfi::cli::imitate(cfg, imitate_in);
    if (*map) nrfi::cli::map(cfg, map_opts);
    if (*cmp) nrfi::cli::compare(cfg, compare_in);
    if (*ev) nrfi::cli::eval(cfg, eval_opts);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
