#include "commands.hpp"

#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "nrfi/error.hpp"
#include "nrfi/feature_stats.hpp"

namespace nrfi::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Dense mapped networks beyond this many parameters are reported, not written.
constexpr std::size_t kMaxDenseParameters = 10'000'000;

struct Run {
  fs::path out;
  std::uint64_t seed = 0;
  std::string hash;

  void stamp(json& j) const {
    j["seed"] = seed;
    j["config_hash"] = hash;
  }
  std::string csv_comment() const { return "# seed=" + std::to_string(seed) + " config_hash=" + hash + "\n"; }
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write output file: " + path.string());
  out << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

// Creates the output directory and records the resolved config. The output
// location itself is left out of the hash so identical runs in different
// directories share it.
Run begin(const RunConfig& cfg, const std::string& command) {
  Run run;
  run.out = cfg.output_dir;
  run.seed = cfg.seed;
  fs::create_directories(run.out);
  auto hashed = to_json(cfg);
  hashed.erase("output_dir");
  run.hash = config_hash(hashed);
  auto doc = to_json(cfg);
  doc["command"] = command;
  doc["config_hash"] = run.hash;
  write_json(run.out / ("config." + command + ".json"), doc);
  return run;
}

fs::path input_path(const std::string& given, const RunConfig& cfg, const char* fallback) {
  const fs::path p = given.empty() ? fs::path(cfg.output_dir) / fallback : fs::path(given);
  if (!fs::exists(p)) throw Error("missing input file: " + p.string() + " (run train-forest first or pass the path)");
  return p;
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError("cannot parse " + path.string() + ": " + e.what());
  }
}

std::vector<std::string> default_class_names(const Dataset& ds) {
  if (!ds.class_names.empty()) return ds.class_names;
  std::vector<std::string> names;
  for (int c = 0; c < ds.class_count; ++c) names.push_back(std::to_string(c));
  return names;
}

struct Teacher {
  RandomForest rf;
  FeatureStats stats;
  double zero_fraction = 0.0;
  std::vector<std::string> class_names;
};

Teacher load_teacher(const RunConfig& cfg, const ArtifactPaths& in) {
  Teacher t;
  t.rf = load_forest(input_path(in.forest, cfg, "forest.json"));
  const auto doc = read_json(input_path(in.stats, cfg, "stats.json"));
  t.stats = feature_stats_from_json(doc);
  t.zero_fraction = doc.value("zero_fraction", 0.0);
  if (doc.contains("class_names")) t.class_names = doc["class_names"].get<std::vector<std::string>>();
  if (t.stats.size() != static_cast<std::size_t>(t.rf.feature_count()))
    throw DimensionError("feature statistics cover " + std::to_string(t.stats.size()) + " features, forest expects " +
                         std::to_string(t.rf.feature_count()));
  return t;
}

// Reloads a labeled CSV and re-encodes its labels with the teacher's class
// order, which a subset of the classes would otherwise shift.
Dataset load_labeled(const fs::path& path, const std::string& label_column, const std::vector<std::string>& class_names,
                     int n_classes) {
  Dataset ds = load_csv(path, label_column);
  if (class_names.empty()) {
    ds.class_count = std::max(ds.class_count, n_classes);
    return ds;
  }
  std::map<std::string, int> code;
  for (std::size_t c = 0; c < class_names.size(); ++c) code[class_names[c]] = static_cast<int>(c);
  for (auto& label : ds.labels) {
    const auto& name = ds.class_names[static_cast<std::size_t>(label)];
    const auto it = code.find(name);
    if (it == code.end()) throw DataError("label '" + name + "' in " + path.string() + " is unknown to the model");
    label = it->second;
  }
  ds.class_names = class_names;
  ds.class_count = static_cast<int>(class_names.size());
  return ds;
}

std::optional<Dataset> load_test(const RunConfig& cfg, const ArtifactPaths& in, const Teacher& t) {
  if (in.test.empty() && !fs::exists(fs::path(cfg.output_dir) / "test.csv")) return std::nullopt;
  return load_labeled(input_path(in.test, cfg, "test.csv"), "label", t.class_names, t.rf.class_count());
}

void apply_data_zero_fraction(RunConfig& cfg, const Teacher& t) {
  if (cfg.p_zero_from_data) cfg.generation.p_zero = t.zero_fraction;
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

// Stored numbers of the forest itself: feature and threshold per split, one
// probability per class per leaf.
std::size_t forest_parameters(const RandomForest& rf) {
  std::size_t n = 0;
  for (const auto& t : rf.trees()) n += 2 * t.split_count() + t.leaf_count() * static_cast<std::size_t>(rf.class_count());
  return n;
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

}  // namespace

void train_forest(const RunConfig& cfg) {
  const Run run = begin(cfg, "train-forest");
  const Dataset full =
      cfg.data.csv.empty()
          ? make_synthetic(parse_synthetic_kind(cfg.data.synthetic), cfg.data.samples, cfg.data.features, cfg.data.noise,
                           cfg.synthetic_seed(), cfg.data.classes)
          : load_csv(cfg.data.csv, cfg.data.label_column);
  auto split = split_dataset(full, cfg.split, cfg.split_seed());
  if (cfg.n_limit) split.train = limit_per_class(split.train, *cfg.n_limit, cfg.limit_seed());

  const auto stats = compute_feature_stats(split.train.features);
  const auto rf = nrfi::train_forest(split.train, cfg.n_trees, cfg.tree, cfg.forest_seed());

  save_csv(split.train, run.out / "train.csv");
  save_csv(split.validation, run.out / "validation.csv");
  save_csv(split.test, run.out / "test.csv");

  auto forest_doc = to_json(rf);
  run.stamp(forest_doc);
  write_json(run.out / "forest.json", forest_doc);

  auto stats_doc = to_json(stats);
  stats_doc["zero_fraction"] = zero_fraction(split.train.features);
  stats_doc["class_names"] = default_class_names(full);
  run.stamp(stats_doc);
  write_json(run.out / "stats.json", stats_doc);

  std::size_t splits = 0, leaves = 0;
  int depth = 0;
  for (const auto& t : rf.trees()) {
    splits += t.split_count();
    leaves += t.leaf_count();
    depth = std::max(depth, t.depth());
  }
  json metrics{{"train_accuracy", evaluate_accuracy(rf, split.train)},
               {"validation_accuracy", evaluate_accuracy(rf, split.validation)},
               {"test_accuracy", evaluate_accuracy(rf, split.test)},
               {"n_trees", rf.tree_count()},
               {"split_nodes", splits},
               {"leaf_nodes", leaves},
               {"max_depth", depth},
               {"n_features", rf.feature_count()},
               {"n_classes", rf.class_count()},
               {"train_size", split.train.size()},
               {"validation_size", split.validation.size()},
               {"test_size", split.test.size()}};
  run.stamp(metrics);
  write_json(run.out / "metrics.json", metrics);
  std::cout << metrics.dump(2) << "\n";
}

void generate(RunConfig cfg, const GenerateOptions& opts) {
  if (opts.format != "csv" && opts.format != "bin") throw Error("unknown sample format '" + opts.format + "' (expected csv or bin)");
  const Teacher t = load_teacher(cfg, opts.in);
  apply_data_zero_fraction(cfg, t);
  const Run run = begin(cfg, "generate");
  const ForestSampler sampler(t.rf, t.stats, cfg.generation);
  const auto n = cfg.generate_samples;
  const auto N = static_cast<std::size_t>(t.rf.feature_count());
  const auto C = static_cast<std::size_t>(t.rf.class_count());

  if (opts.format == "csv") {
    std::ofstream out(run.out / "samples.csv");
    if (!out) throw Error("cannot write " + (run.out / "samples.csv").string());
    out.precision(17);
    out << run.csv_comment();
    for (std::size_t f = 0; f < N; ++f) out << 'x' << f << ',';
    for (std::size_t c = 0; c < C; ++c) out << 'p' << c << ',';
    out << "target,w_path,p_forest,trees_used\n";
    for (std::size_t k = 0; k < n; ++k) {
      const auto s = sampler.at(k);
      for (double v : s.x) out << v << ',';
      for (double v : s.y) out << v << ',';
      out << s.target << ',' << s.w_path << ',' << s.p_forest << ',' << s.trees_used << '\n';
    }
  } else {
    // little-endian: magic, rows, N, C, then per row N + C doubles, int32
    // target, double w_path, double p_forest, uint32 trees_used
    std::ofstream out(run.out / "samples.bin", std::ios::binary);
    if (!out) throw Error("cannot write " + (run.out / "samples.bin").string());
    auto put = [&](const auto& v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); };
    out.write("NRFISMP1", 8);
    put(static_cast<std::uint64_t>(n));
    put(static_cast<std::uint32_t>(N));
    put(static_cast<std::uint32_t>(C));
    for (std::size_t k = 0; k < n; ++k) {
      const auto s = sampler.at(k);
      for (double v : s.x) put(v);
      for (double v : s.y) put(v);
      put(static_cast<std::int32_t>(s.target));
      put(s.w_path);
      put(s.p_forest);
      put(static_cast<std::uint32_t>(s.trees_used));
    }
  }

  const auto hist = confidence_distribution(t.rf, t.stats, cfg.generation, n, cfg.histogram_bins);
  std::string csv = run.csv_comment() + "bin_low,bin_high,count\n";
  for (std::size_t b = 0; b < hist.counts.size(); ++b) {
    const double w = 1.0 / static_cast<double>(hist.counts.size());
    csv += fmt(static_cast<double>(b) * w) + "," + fmt(static_cast<double>(b + 1) * w) + "," + std::to_string(hist.counts[b]) + "\n";
  }
  write_text(run.out / "histogram.csv", csv);
  json doc{{"samples", n},
           {"bins", hist.counts.size()},
           {"counts", hist.counts},
           {"mean", hist.mean},
           {"stddev", hist.stddev},
           {"use_pw", cfg.generation.use_pw},
           {"use_dts", cfg.generation.use_dts}};
  run.stamp(doc);
  write_json(run.out / "histogram.json", doc);
  std::cout << doc.dump(2) << "\n";
}

void imitate(RunConfig cfg, const ArtifactPaths& in) {
  const Teacher t = load_teacher(cfg, in);
  const auto test = load_test(cfg, in, t);
  apply_data_zero_fraction(cfg, t);
  const Run run = begin(cfg, "imitate");

  const auto result = nrfi::imitate(t.rf, t.stats, cfg.hidden, cfg.generation, cfg.training, cfg.imitation,
                                    test ? &*test : nullptr);
  json extra{{"stats", to_json(t.stats)}, {"class_names", t.class_names}, {"hidden", cfg.hidden}};
  run.stamp(extra);
  save_mlp(result.student, run.out / "student.json", extra);

  auto report = to_json(result.report);
  report["hidden"] = cfg.hidden;
  run.stamp(report);
  write_json(run.out / "report.json", report);

  std::ostringstream csv;
  csv.precision(17);
  csv << run.csv_comment() << "epoch,train_loss,pool_loss\n";
  for (std::size_t e = 0; e < result.report.train_loss.size(); ++e)
    csv << e << ',' << result.report.train_loss[e] << ',' << result.report.pool_loss[e] << '\n';
  write_text(run.out / "history.csv", csv.str());
  std::cout << report.dump(2) << "\n";
}

void map(const RunConfig& cfg, const MapOptions& opts) {
  const RandomForest rf = load_forest(input_path(opts.in.forest, cfg, "forest.json"));
  const Run run = begin(cfg, "map");
  const auto net = map_direct(rf, cfg.map_activation, cfg.map_beta);
  const auto sweep = sweep_split_mapping_size(rf);
  const auto layers = net.layer_sizes();
  json size{{"direct_parameters", count_parameters(net)},
            {"layer_sizes", layers},
            {"best_split_parameters", sweep.best_count},
            {"best_block_depth", sweep.best_block_depth},
            {"split_parameters_by_block_depth", sweep.counts},
            {"activation", to_string(cfg.map_activation)},
            {"beta", cfg.map_beta}};
  run.stamp(size);
  write_json(run.out / "size.json", size);
  if (!opts.size_only) {
    if (count_parameters(net) > kMaxDenseParameters)
      throw Error("mapped network has " + std::to_string(count_parameters(net)) +
                  " dense parameters, too many to write; use --size-only");
    auto doc = net.to_dense_json();
    run.stamp(doc);
    write_json(run.out / "mapped.json", doc);
  }
  std::cout << size.dump(2) << "\n";
}

void compare(RunConfig cfg, const ArtifactPaths& in) {
  const Teacher t = load_teacher(cfg, in);
  const auto test = load_test(cfg, in, t);
  if (!test) throw Error("compare needs a labeled test set (test.csv)");
  apply_data_zero_fraction(cfg, t);
  const Run run = begin(cfg, "compare");

  json rows = json::array();
  auto add = [&](const std::string& model, const std::vector<int>& hidden, std::size_t params, std::optional<double> acc,
                 std::optional<double> fid) {
    rows.push_back({{"model", model},
                    {"hidden", format_hidden_sizes(hidden)},
                    {"parameters", params},
                    {"accuracy", optional_json(acc)},
                    {"fidelity", optional_json(fid)}});
  };

  add("random_forest", {}, forest_parameters(t.rf), evaluate_accuracy(t.rf, *test), 1.0);
  for (const auto& hidden : cfg.compare_hidden) {
    const auto r = nrfi::imitate(t.rf, t.stats, hidden, cfg.generation, cfg.training, cfg.imitation, &*test);
    add("nrfi", hidden, r.report.student_parameters, r.report.student_test_accuracy, r.report.fidelity);
  }
  const auto mapped = map_direct(t.rf, cfg.map_activation, cfg.map_beta);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test->size(); ++i) correct += argmax(mapped.forward(test->row(i))) == test->labels[i];
  const auto probe = make_probe_set(t.stats, cfg.generation, cfg.imitation.probe_size,
                                    derive_seed(cfg.generation.seed, kProbeStream), &test->features);
  add("direct_mapping", {}, count_parameters(mapped), static_cast<double>(correct) / static_cast<double>(test->size()),
      evaluate_fidelity(mapped, t.rf, probe));
  // counts only; no network is built for the splitting construction
  add("split_mapping_estimate", {}, sweep_split_mapping_size(t.rf).best_count, std::nullopt, std::nullopt);

  std::string csv = run.csv_comment() + "model,hidden,parameters,accuracy,fidelity\n";
  for (const auto& r : rows) {
    auto num = [](const json& v) { return v.is_null() ? std::string() : fmt(v.get<double>()); };
    csv += r["model"].get<std::string>() + ",\"" + r["hidden"].get<std::string>() + "\"," +
           std::to_string(r["parameters"].get<std::size_t>()) + "," + num(r["accuracy"]) + "," + num(r["fidelity"]) + "\n";
  }
  write_text(run.out / "compare.csv", csv);
  json doc{{"rows", rows}};
  run.stamp(doc);
  write_json(run.out / "compare.json", doc);
  std::cout << csv;
}

void eval(const RunConfig& cfg, const EvalOptions& opts) {
  if (opts.model.empty()) throw Error("eval needs --model <forest.json|student.json>");
  const fs::path model_path = input_path(opts.model, cfg, "");
  const auto doc = read_json(model_path);
  const fs::path data_path = input_path(opts.data, cfg, "test.csv");
  // split files written by train-forest always name the column "label"
  const std::string label_column = opts.data.empty() ? "label" : cfg.data.label_column;
  const Run run = begin(cfg, "eval");

  json result;
  if (doc.contains("trees")) {
    const auto rf = forest_from_json(doc);
    std::vector<std::string> names;
    const fs::path stats_path = opts.in.stats.empty() ? fs::path(cfg.output_dir) / "stats.json" : fs::path(opts.in.stats);
    if (fs::exists(stats_path)) names = read_json(stats_path).value("class_names", std::vector<std::string>{});
    const auto ds = load_labeled(data_path, label_column, names, rf.class_count());
    result = {{"model", "random_forest"}, {"samples", ds.size()}, {"accuracy", evaluate_accuracy(rf, ds)}};
  } else if (doc.contains("layer_sizes") && doc.contains("stats")) {
    const auto net = mlp_from_json(doc);
    const auto stats = feature_stats_from_json(doc["stats"]);
    const auto names = doc.value("class_names", std::vector<std::string>{});
    const auto ds = load_labeled(data_path, label_column, names, net.output_size());
    result = {{"model", "student"},
              {"hidden", std::vector<int>(net.layer_sizes.begin() + 1, net.layer_sizes.end() - 1)},
              {"samples", ds.size()},
              {"accuracy", evaluate_accuracy(net, stats, ds)}};
    const fs::path forest_path = opts.in.forest.empty() ? fs::path(cfg.output_dir) / "forest.json" : fs::path(opts.in.forest);
    if (fs::exists(forest_path)) result["fidelity"] = evaluate_fidelity(net, stats, load_forest(forest_path), ds.features);
  } else {
    throw FormatError("unrecognised model file " + model_path.string() + " (expected a forest or a student network)");
  }
  run.stamp(result);
  write_json(run.out / "eval.json", result);
  std::cout << result.dump(2) << "\n";
}

}  // namespace nrfi::cli
