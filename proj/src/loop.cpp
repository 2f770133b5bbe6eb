#include "wrvi/train/loop.hpp"

#include <algorithm>
#include <chrono>
#include <limits>

#include "wrvi/train/observed.hpp"

namespace wrvi {

using ad::Tape;
using ad::Tensor;
using ad::Var;

void TrainConfig::validate() const {
  if (mc_samples < 1) throw ConfigError("training: mc_samples must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("training: learning_rate must be > 0");
  if (halving_period == 0) throw ConfigError("training: halving_period must be >= 1");
  if (log_period == 0) throw ConfigError("training: log_period must be >= 1");
  if (checkpoint_period == 0) throw ConfigError("training: checkpoint_period must be >= 1");
}

std::vector<Tensor*> trainable_params(TrainState& state) {
  std::vector<Tensor*> out;
  auto collect = [&](HeadParams& h, const std::string& prefix) {
    for_each_param(h, prefix, [&](const std::string&, Tensor& t) { out.push_back(&t); });
  };
  if (state.phase == TrainPhase::solver_free) {
    collect(state.alpha, "alpha");
    collect(state.beta, "beta");
  } else {
    if (!state.phi) throw ConfigError("observed phase requires an encoder head");
    collect(*state.phi, "phi");
  }
  return out;
}

std::vector<std::pair<std::string, Tensor*>> named_params(TrainState& state) {
  std::vector<std::pair<std::string, Tensor*>> out;
  auto collect = [&](HeadParams& h, const std::string& prefix) {
    for_each_param(h, prefix,
                   [&](const std::string& name, Tensor& t) { out.emplace_back(name, &t); });
  };
  collect(state.alpha, "alpha");
  collect(state.beta, "beta");
  if (state.phi) collect(*state.phi, "phi");
  return out;
}

namespace {

struct StepResult {
  bool ok = false;
  double elbo = 0.0;
  double residual_term = 0.0;
};

// Same order as for_each_param so gradients line up with the state's
// optimizer moments.
void enumerate_head_vars(const HeadVars& h, std::vector<Var>& out) {
  for (std::size_t k = 0; k < h.trunk.weights.size(); ++k) {
    out.push_back(h.trunk.weights[k]);
    out.push_back(h.trunk.biases[k]);
  }
  out.push_back(h.mean_w);
  out.push_back(h.mean_b);
  out.push_back(h.logvar_w);
  out.push_back(h.logvar_b);
}

StepResult solver_free_step(const TrainConfig& config, const ProblemHandles& handles,
                            TrainState& state, const AdamHyper& hyper) {
  Tape tape;
  HeadVars alpha = lift(tape, state.alpha);
  HeadVars beta = lift(tape, state.beta);
  std::vector<Var> param_vars;
  enumerate_head_vars(alpha, param_vars);
  enumerate_head_vars(beta, param_vars);

  ElboEstimate est = build_solver_free_elbo(tape, handles, alpha, beta, state.rng,
                                            config.mc_samples, config.include_prior_constants);
  Var loss = -est.value;
  std::vector<Tensor> grads = tape.gradients(loss, param_vars);

  std::vector<Tensor*> params = trainable_params(state);
  adam_step(params, state.opt, std::move(grads), state.lr, hyper, config.clip_norm);
  return {true, est.value.value()[0], est.residual_term.value()[0]};
}

StepResult observed_step(const TrainConfig& config, const ProblemHandles& handles,
                         TrainState& state, const AdamHyper& hyper,
                         const ObservationModel& model, const ObservationData& data) {
  const std::size_t n_obs = data.y.rows();
  const std::size_t row = static_cast<std::size_t>(state.iteration % n_obs);
  Tensor y = Tensor::zeros({data.y.cols()});
  for (std::size_t j = 0; j < y.size(); ++j) y[j] = data.y.at(row, j);

  Tape tape;
  HeadVars phi = lift(tape, *state.phi);
  std::vector<Var> param_vars;
  enumerate_head_vars(phi, param_vars);

  Var value = build_observed_elbo(tape, handles, phi, y, model, state.rng);
  Var loss = -value;
  std::vector<Tensor> grads = tape.gradients(loss, param_vars);

  std::vector<Tensor*> params = trainable_params(state);
  adam_step(params, state.opt, std::move(grads), state.lr, hyper, config.clip_norm);
  return {true, value.value()[0], value.value()[0]};
}

}  // namespace

TrainState train_loop(const TrainConfig& config, const ProblemSpec& spec, TrainState state,
                      const TraceSink& trace, const CheckpointSink& checkpoint,
                      const ObservationModel* obs_model, const ObservationData* obs_data) {
  config.validate();
  if (state.phase == TrainPhase::observed && (obs_model == nullptr || obs_data == nullptr)) {
    throw ConfigError("train_loop: observed phase requires an observation model and data");
  }
  ProblemHandles handles = ProblemHandles::make(spec);
  const AdamHyper hyper;

  const std::uint64_t end = state.iteration + config.iterations;
  while (state.iteration < end) {
    if (state.iteration > 0 && state.iteration % config.halving_period == 0) {
      state.lr = std::max(config.lr_floor, state.lr * 0.5);
    }

    const auto t0 = std::chrono::steady_clock::now();
    StepResult step;
    try {
      step = state.phase == TrainPhase::solver_free
                 ? solver_free_step(config, handles, state, hyper)
                 : observed_step(config, handles, state, hyper, *obs_model, *obs_data);
    } catch (const NumericError&) {
      // Skip the step without touching optimizer moments and back off.
      step.ok = false;
      state.lr = std::max(config.lr_floor, state.lr * 0.5);
    }
    const auto t1 = std::chrono::steady_clock::now();

    if (trace && (state.iteration % config.log_period == 0 || !step.ok)) {
      TraceRow row;
      row.iteration = state.iteration;
      row.elbo = step.ok ? step.elbo : std::numeric_limits<double>::quiet_NaN();
      row.residual_term = step.ok ? step.residual_term : std::numeric_limits<double>::quiet_NaN();
      row.lr = state.lr;
      row.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
      trace(row);
    }

    state.iteration += 1;
    if (checkpoint && state.iteration % config.checkpoint_period == 0) checkpoint(state);
  }
  return state;
}

}  // namespace wrvi
