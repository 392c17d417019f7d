#include "nrfi/imitation.hpp"

#include <limits>

#include <nlohmann/json.hpp>

#include "nrfi/error.hpp"

namespace nrfi {

namespace {

void to_one_hot(RowMatrix& y) {
  for (Eigen::Index r = 0; r < y.rows(); ++r) {
    Eigen::Index best = 0;
    y.row(r).maxCoeff(&best);
    y.row(r).setZero();
    y(r, best) = 1.0;
  }
}

template <typename Predict>
double agreement(const RandomForest& teacher, const RowMatrix& probe, Predict&& student_argmax) {
  if (probe.rows() == 0) throw DataError("fidelity needs a non-empty probe set");
  if (probe.cols() != teacher.feature_count()) throw DimensionError("probe width does not match the teacher");
  std::vector<double> y(static_cast<std::size_t>(teacher.class_count()));
  std::size_t agree = 0;
  const auto cols = static_cast<std::size_t>(probe.cols());
  for (Eigen::Index r = 0; r < probe.rows(); ++r) {
    predict_forest_into(teacher, {probe.data() + r * probe.cols(), cols}, y);
    if (argmax(y) == student_argmax(r)) ++agree;
  }
  return static_cast<double>(agree) / static_cast<double>(probe.rows());
}

}  // namespace

nlohmann::json to_json(const ImitationReport& report) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  return {{"train_loss", report.train_loss},
          {"pool_loss", report.pool_loss},
          {"selected_epoch", report.selected_epoch ? nlohmann::json(*report.selected_epoch) : nlohmann::json(nullptr)},
          {"student_parameters", report.student_parameters},
          {"samples_consumed", report.samples_consumed},
          {"teacher_test_accuracy", opt(report.teacher_test_accuracy)},
          {"student_test_accuracy", opt(report.student_test_accuracy)},
          {"fidelity", opt(report.fidelity)},
          {"probe_points", report.probe_points}};
}

ImitationResult imitate(const RandomForest& rf, const FeatureStats& stats, std::span<const int> hidden,
                        const GenerationConfig& gen_cfg, const TrainConfig& train_cfg, const ImitationOptions& options,
                        const Dataset* test) {
  train_cfg.validate();
  if (options.pool_size == 0) throw Error("selection pool must hold at least one sample");
  const ForestSampler sampler(rf, stats, gen_cfg);

  ImitationResult result{mlp_new(architecture(rf.feature_count(), hidden, rf.class_count()), train_cfg.seed), {}};
  auto& report = result.report;
  Mlp net = result.student;
  OptimizerState opt(net);

  RowMatrix pool_x, pool_y;
  sampler.fill(0, options.pool_size, pool_x, pool_y);
  pool_x = normalize_rows(pool_x, stats);
  if (options.hard_labels) to_one_hot(pool_y);

  std::uint64_t position = options.pool_size;
  const auto batch = static_cast<std::size_t>(train_cfg.batch_size);
  double best_loss = std::numeric_limits<double>::infinity();
  RowMatrix x, y;
  for (int epoch = 0; epoch < train_cfg.epochs; ++epoch) {
    double loss_sum = 0.0;
    for (int step = 0; step < train_cfg.steps_per_epoch; ++step) {
      sampler.fill(position, batch, x, y);
      position += batch;
      x = normalize_rows(x, stats);
      if (options.hard_labels) to_one_hot(y);
      loss_sum += train_step(net, opt, x, y, train_cfg);
    }
    report.train_loss.push_back(loss_sum / train_cfg.steps_per_epoch);
    const double pool_loss = mean_loss(net, pool_x, pool_y);
    report.pool_loss.push_back(pool_loss);
    if (pool_loss < best_loss) {
      best_loss = pool_loss;
      result.student = net;
      report.selected_epoch = epoch;
    }
  }
  report.samples_consumed = static_cast<std::size_t>(position - options.pool_size);
  report.student_parameters = count_parameters(result.student);

  if (test) {
    report.teacher_test_accuracy = evaluate_accuracy(rf, *test);
    report.student_test_accuracy = evaluate_accuracy(result.student, stats, *test);
  }
  if (options.probe_size > 0 || test) {
    const RowMatrix probe = make_probe_set(stats, gen_cfg, options.probe_size, derive_seed(gen_cfg.seed, kProbeStream),
                                           test ? &test->features : nullptr);
    if (probe.rows() > 0) {
      report.fidelity = evaluate_fidelity(result.student, stats, rf, probe);
      report.probe_points = static_cast<std::size_t>(probe.rows());
    }
  }
  return result;
}

double evaluate_accuracy(const RandomForest& rf, const Dataset& ds) {
  if (ds.size() == 0) throw DataError("cannot evaluate accuracy on an empty dataset");
  if (ds.feature_count() != rf.feature_count())
    throw DimensionError("dataset has " + std::to_string(ds.feature_count()) + " features, forest expects " +
                         std::to_string(rf.feature_count()));
  std::vector<double> y(static_cast<std::size_t>(rf.class_count()));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    predict_forest_into(rf, ds.row(i), y);
    if (argmax(y) == ds.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(ds.size());
}

double evaluate_accuracy(const Mlp& net, const FeatureStats& stats, const Dataset& ds) {
  if (ds.size() == 0) throw DataError("cannot evaluate accuracy on an empty dataset");
  if (ds.feature_count() != net.input_size() || stats.size() != static_cast<std::size_t>(net.input_size()))
    throw DimensionError("dataset has " + std::to_string(ds.feature_count()) + " features, network expects " +
                         std::to_string(net.input_size()));
  const RowMatrix probs = forward_batch(net, normalize_rows(ds.features, stats));
  std::size_t correct = 0;
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    Eigen::Index best = 0;
    probs.row(r).maxCoeff(&best);
    if (best == ds.labels[static_cast<std::size_t>(r)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(ds.size());
}

double evaluate_fidelity(const Mlp& student, const FeatureStats& stats, const RandomForest& teacher, const RowMatrix& probe) {
  if (probe.rows() == 0) throw DataError("fidelity needs a non-empty probe set");
  const RowMatrix probs = forward_batch(student, normalize_rows(probe, stats));
  return agreement(teacher, probe, [&](Eigen::Index r) {
    Eigen::Index best = 0;
    probs.row(r).maxCoeff(&best);
    return static_cast<int>(best);
  });
}

double evaluate_fidelity(const MappedNetwork& student, const RandomForest& teacher, const RowMatrix& probe) {
  const auto cols = static_cast<std::size_t>(probe.cols());
  return agreement(teacher, probe, [&](Eigen::Index r) { return argmax(student.forward({probe.data() + r * probe.cols(), cols})); });
}

RowMatrix make_probe_set(const FeatureStats& stats, const GenerationConfig& gen_cfg, std::size_t count, std::uint64_t seed,
                         const RowMatrix* extra) {
  const auto n = static_cast<Eigen::Index>(stats.size());
  const Eigen::Index extra_rows = extra ? extra->rows() : 0;
  if (extra && extra->cols() != n) throw DimensionError("probe rows do not match the feature statistics");
  RowMatrix probe(static_cast<Eigen::Index>(count) + extra_rows, n);
  Rng rng(seed);
  for (Eigen::Index r = 0; r < static_cast<Eigen::Index>(count); ++r) {
    const auto x = init_sample(stats, gen_cfg, rng);
    probe.row(r) = Eigen::Map<const Eigen::RowVectorXd>(x.data(), n);
  }
  if (extra) probe.bottomRows(extra_rows) = *extra;
  return probe;
}

}  // namespace nrfi
