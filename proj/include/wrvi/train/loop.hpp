#pragma once

#include <functional>
#include <optional>
#include <string>

#include "wrvi/train/adam.hpp"
#include "wrvi/train/elbo.hpp"

namespace wrvi {

enum class TrainPhase { solver_free, observed };

// Full trainable state: both heads (optionally the observation encoder),
// optimizer moments, iteration counter, learning rate, and the random
// stream. The loop is a pure function of this state plus the config, so
// replays and resumes are bit-identical.
struct TrainState {
  TrainPhase phase = TrainPhase::solver_free;
  HeadParams alpha;
  HeadParams beta;
  std::optional<HeadParams> phi;
  AdamState opt;
  std::uint64_t iteration = 0;
  double lr = 1e-3;
  RandomStream rng{0};
};

// Trainable tensors for the state's phase, in canonical (checkpoint)
// order. The observed phase trains the encoder only; the pretrained
// inverse head stays frozen.
std::vector<ad::Tensor*> trainable_params(TrainState& state);
// Every tensor serialized into checkpoints (parameters of all heads).
std::vector<std::pair<std::string, ad::Tensor*>> named_params(TrainState& state);

struct TrainConfig {
  std::uint64_t iterations = 1000;
  int mc_samples = 1;
  double learning_rate = 1e-3;
  std::uint64_t halving_period = 200000;
  double lr_floor = 1e-6;
  std::uint64_t seed = 0;
  double clip_norm = 100.0;
  std::uint64_t checkpoint_period = 10000;
  std::uint64_t log_period = 100;
  bool include_prior_constants = false;

  void validate() const;
};

struct TraceRow {
  std::uint64_t iteration = 0;
  double elbo = 0.0;
  double residual_term = 0.0;
  double lr = 0.0;
  double wall_ms = 0.0;
};

using TraceSink = std::function<void(const TraceRow&)>;
using CheckpointSink = std::function<void(const TrainState&)>;

// Observation-phase inputs: rows of observed data with their known
// forcing, plus the observation operator and noise level.
enum class ObservationOperator { identity, middle_truncation };

struct ObservationModel {
  ObservationOperator op = ObservationOperator::identity;
  std::size_t truncation_width = 20;
  double sigma_y = 0.01;

  std::size_t out_dim(std::size_t mesh_dim) const;
  // Selection of observed mesh entries (row indices kept).
  std::vector<std::size_t> kept_indices(std::size_t mesh_dim) const;
  ad::Tensor apply(const ad::Tensor& mesh_values) const;
  void validate() const;
};

struct ObservationData {
  ad::Tensor y;  // [n_obs, d_y]
  ad::Tensor f;  // [n_obs, d_f] known forcing per observation
};

// Runs iterations of sample -> estimate -> update. The solver-free phase
// optimizes both heads against the zero-residual likelihood; the
// observed phase cycles through the dataset one observation at a time
// (doubly-stochastic one-sample estimate). A non-finite step is skipped
// without advancing optimizer moments and the learning rate is halved.
TrainState train_loop(const TrainConfig& config, const ProblemSpec& spec, TrainState state,
                      const TraceSink& trace = {}, const CheckpointSink& checkpoint = {},
                      const ObservationModel* obs_model = nullptr,
                      const ObservationData* obs_data = nullptr);

}  // namespace wrvi
