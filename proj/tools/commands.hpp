#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nrfi/run_config.hpp"

namespace nrfi::cli {

/// Inputs shared by the commands that consume a trained forest. Empty paths
/// default to files inside the output directory.
struct ArtifactPaths {
  std::string forest;
  std::string stats;
  std::string test;
};

struct GenerateOptions {
  ArtifactPaths in;
  std::string format = "csv";
};

struct MapOptions {
  ArtifactPaths in;
  bool size_only = false;
};

struct EvalOptions {
  ArtifactPaths in;
  std::string model;
  std::string data;
};

void train_forest(const RunConfig& cfg);
void generate(RunConfig cfg, const GenerateOptions& opts);
void imitate(RunConfig cfg, const ArtifactPaths& in);
void map(const RunConfig& cfg, const MapOptions& opts);
void compare(RunConfig cfg, const ArtifactPaths& in);
void eval(const RunConfig& cfg, const EvalOptions& opts);

}  // namespace nrfi::cli
