#pragma once

#include <string>

#include "wrvi/eval/metrics.hpp"
#include "wrvi/train/checkpoint.hpp"
#include "wrvi/train/observed.hpp"

namespace wrvi {

// Network sizing shared by the CLI and the experiment drivers.
struct NetworkShape {
  std::size_t hidden_width = 100;
  std::size_t hidden_depth = 4;
  ad::Activation activation = ad::Activation::swish;
  double lv_min = kDefaultLogvarMin;
  double lv_max = kDefaultLogvarMax;
};

// Fresh state with input/output layouts derived from the problem:
// forward head (z,f)->solution representation, inverse head
// (solution,f)->z, optionally an encoder y->solution coefficients.
TrainState make_initial_state(const ProblemSpec& spec, const NetworkShape& net,
                              std::uint64_t seed, bool with_phi = false,
                              const ObservationModel* obs = nullptr);

struct SampleRecord {
  int draw = 0;
  std::string block;  // forward_u | inverse_kappa_field | inverse_z
  int coord = 0;
  double truth = 0.0, mean = 0.0, stdev = 0.0, sq_err = 0.0;
};

struct EvalReport {
  int n_draws = 0;
  int excluded_draws = 0;
  std::uint64_t seed = 0;
  double forward_mnse = 0.0;
  double forward_coverage = 0.0;
  double inverse_mnse = 0.0;
  double inverse_coverage = 0.0;
  double mean_emulator_ms = 0.0;
  double mean_oracle_ms = 0.0;
  std::vector<SampleRecord> samples;
};

// Draws (z, f) from the priors, solves each with the Newton oracle
// (timed separately from the emulator), and scores the forward map
// against the oracle field and the inverse map against the generating
// parameters. Oracle failures exclude the draw and are counted.
EvalReport forward_inverse_eval(TrainState& state, const ProblemSpec& spec, int n_draws,
                                std::uint64_t seed);

// Collocation problems have no mesh oracle in this artifact: the forward
// quality is the PDE residual of the predicted mean field and the inverse
// map is scored against the generating parameters fed its own mean field.
struct CollocationEvalReport {
  int n_draws = 0;
  std::uint64_t seed = 0;
  double mean_sq_residual = 0.0;   // domain rows of the mean field
  double inverse_mnse = 0.0;       // z space
  double inverse_coverage = 0.0;   // z space, 2 sigma
  std::vector<SampleRecord> samples;
};

CollocationEvalReport collocation_eval(TrainState& state, const ProblemSpec& spec, int n_draws,
                                       std::uint64_t seed);

// Log10 heatmap data over a (gamma, kappa) grid: mean squared domain
// residual of the mean field and mean predictive stdev.
struct ScanResult {
  std::vector<double> gamma, kappa;  // one entry per cell, row-major
  std::vector<double> log10_mean_residual;
  std::vector<double> log10_mean_stdev;
};

ScanResult residual_grid_scan(const HeadParams& alpha, const ProblemSpec& spec,
                              const std::vector<double>& gamma_values,
                              const std::vector<double>& kappa_values);

struct SweepRow {
  double eps = 0.0;
  std::uint64_t seed = 0;
  double final_forward_mnse = 0.0;
  bool ok = true;
};

using SweepTraceSink =
    std::function<void(double eps, std::uint64_t seed, const TraceRow& row)>;

// Independent trainings differing only in the uniform residual stdev.
std::vector<SweepRow> epsilon_sweep(const ProblemSpec& base_spec, const NetworkShape& net,
                                    const TrainConfig& base_config,
                                    const std::vector<double>& eps_values,
                                    const std::vector<std::uint64_t>& seeds, int eval_draws,
                                    const SweepTraceSink& trace = {});

// Synthetic observation rows for the data pipeline: oracle solutions of
// prior draws pushed through the observation operator plus noise.
struct SyntheticObservations {
  ObservationData data;
  ad::Tensor z_truth;  // [n, dz]
  ad::Tensor u_truth;  // [n, n_nodes]
};

SyntheticObservations make_synthetic_observations(const ProblemSpec& spec,
                                                  const ObservationModel& model, int n,
                                                  std::uint64_t seed);

}  // namespace wrvi
