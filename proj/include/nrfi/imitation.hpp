#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "nrfi/datagen.hpp"
#include "nrfi/mapping.hpp"
#include "nrfi/mlp.hpp"

namespace nrfi {

/// Stream id of the fidelity probe generator, far above any sample position:
/// the probe set is drawn from Rng(derive_seed(gen_cfg.seed, kProbeStream)).
inline constexpr std::uint64_t kProbeStream = ~std::uint64_t{0};

struct ImitationOptions {
  /// Generated pairs drawn first (stream positions [0, pool_size)) and used
  /// only for model selection.
  std::size_t pool_size = 2000;
  /// Fresh init_sample draws added to the fidelity probe set.
  std::size_t probe_size = 2000;
  /// Train on one-hot argmax targets instead of forest probabilities.
  bool hard_labels = false;
};

struct ImitationReport {
  std::vector<double> train_loss;  // mean training loss per epoch
  std::vector<double> pool_loss;   // selection-pool loss after each epoch
  /// Zero-based epoch of the returned snapshot; empty when epochs == 0.
  std::optional<int> selected_epoch;
  std::size_t student_parameters = 0;
  std::size_t samples_consumed = 0;
  std::optional<double> teacher_test_accuracy;
  std::optional<double> student_test_accuracy;
  std::optional<double> fidelity;
  std::size_t probe_points = 0;
};

nlohmann::json to_json(const ImitationReport& report);

struct ImitationResult {
  Mlp student;
  ImitationReport report;
};

/// Trains a student on the on-the-fly sample stream of the teacher. Inputs
/// are normalized with `stats`; the snapshot with the lowest selection-pool
/// loss is returned. When `test` is given, accuracies on it are reported and
/// its inputs join the fidelity probe set.
ImitationResult imitate(const RandomForest& rf, const FeatureStats& stats, std::span<const int> hidden,
                        const GenerationConfig& gen_cfg, const TrainConfig& train_cfg,
                        const ImitationOptions& options = {}, const Dataset* test = nullptr);

double evaluate_accuracy(const RandomForest& rf, const Dataset& ds);
/// The network sees inputs normalized with `stats`.
double evaluate_accuracy(const Mlp& net, const FeatureStats& stats, const Dataset& ds);

/// Fraction of probe rows on which the student (normalized input) and the
/// teacher (raw input) agree on the argmax class.
double evaluate_fidelity(const Mlp& student, const FeatureStats& stats, const RandomForest& teacher, const RowMatrix& probe);
/// Mapped networks consume raw inputs.
double evaluate_fidelity(const MappedNetwork& student, const RandomForest& teacher, const RowMatrix& probe);

/// `count` init_sample draws from Rng(seed), followed by the rows of `extra`.
RowMatrix make_probe_set(const FeatureStats& stats, const GenerationConfig& gen_cfg, std::size_t count, std::uint64_t seed,
                         const RowMatrix* extra = nullptr);

}  // namespace nrfi
