#pragma once

#include <optional>
#include <string>

#include "wrvi/eval/experiments.hpp"

namespace wrvi {

struct ScanConfig {
  std::vector<double> gamma_values;
  std::vector<double> kappa_values;
};

struct SweepConfig {
  std::vector<double> eps_values;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::uint64_t iterations = 10000;
  int n_draws = 50;
};

struct EvalConfig {
  int n_draws = 100;
  int posterior_samples = 64;
  std::optional<ScanConfig> scan;
  std::optional<SweepConfig> sweep;
};

struct ObservationConfig {
  ObservationModel model;
  std::string dataset = "synthetic";  // path to a CSV, or "synthetic"
  int n_observations = 100;
  std::uint64_t iterations = 20000;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
};

struct PathsConfig {
  std::string out_dir = "out";
  std::string checkpoint = "checkpoint";
};

// One experiment: problem + networks + training + evaluation + paths.
// Parsed strictly: unknown keys are rejected with their path.
struct ExperimentConfig {
  ProblemSpec problem;
  NetworkShape network;
  TrainConfig training;
  EvalConfig evaluation;
  std::optional<ObservationConfig> observation;
  PathsConfig paths;

  // Hash of the canonical problem block; recorded in checkpoints.
  std::string spec_hash() const;
};

ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& json_text);
std::string serialize_config(const ExperimentConfig& config);

}  // namespace wrvi
