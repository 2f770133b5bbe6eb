#include "wrvi/cli/commands.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>

#include "json.hpp"
#include "wrvi/cli/config.hpp"
#include "wrvi/util/csv.hpp"

namespace wrvi::cli {

namespace fs = std::filesystem;
using ad::Tensor;
using nlohmann::json;

namespace {

template <class F>
int guarded(F&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ShapeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
}

ExperimentConfig load_with_overrides(const CommonOptions& opt) {
  if (opt.config_path.empty()) throw ConfigError("--config is required");
  ExperimentConfig config = load_config(opt.config_path);
  if (!opt.out_dir_override.empty()) config.paths.out_dir = opt.out_dir_override;
  if (opt.seed_override) config.training.seed = *opt.seed_override;
  if (opt.n_draws_override) config.evaluation.n_draws = *opt.n_draws_override;
  if (opt.n_samples_override) config.evaluation.posterior_samples = *opt.n_samples_override;
  return config;
}

void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
}

// Resumed states must match the architecture the config describes.
void check_same_layout(TrainState& a, TrainState& b) {
  auto pa = named_params(a);
  auto pb = named_params(b);
  if (pa.size() != pb.size()) {
    throw ConfigError("resume: checkpoint has a different parameter count than the config");
  }
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (pa[i].first != pb[i].first || !pa[i].second->same_shape(*pb[i].second)) {
      throw ConfigError("resume: parameter '" + pa[i].first + "' does not match the config");
    }
  }
}

ObservationData read_observation_csv(const std::string& path, std::size_t df) {
  CsvTable table = read_csv(path);
  if (table.header.size() <= df) {
    throw ConfigError("observation dataset '" + path + "' has too few columns");
  }
  const std::size_t dy = table.header.size() - df;
  const std::size_t n = table.rows.size();
  if (n == 0) throw ConfigError("observation dataset '" + path + "' has no rows");
  ObservationData data;
  data.f = Tensor::zeros({n, df});
  data.y = Tensor::zeros({n, dy});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < df; ++j) data.f.at(i, j) = table.rows[i][j];
    for (std::size_t j = 0; j < dy; ++j) data.y.at(i, j) = table.rows[i][df + j];
  }
  return data;
}

void write_observation_csv(const std::string& path, const ObservationData& data) {
  std::vector<std::string> header;
  for (std::size_t j = 0; j < data.f.cols(); ++j) header.push_back("f_" + std::to_string(j));
  for (std::size_t j = 0; j < data.y.cols(); ++j) header.push_back("y_" + std::to_string(j));
  CsvWriter w(path, header);
  for (std::size_t i = 0; i < data.f.rows(); ++i) {
    std::vector<double> row;
    for (std::size_t j = 0; j < data.f.cols(); ++j) row.push_back(data.f.at(i, j));
    for (std::size_t j = 0; j < data.y.cols(); ++j) row.push_back(data.y.at(i, j));
    w.write_row(row);
  }
}

}  // namespace

int cmd_train(const CommonOptions& opt) {
  return guarded([&]() {
    ExperimentConfig config = load_with_overrides(opt);
    ensure_out_dir(config.paths.out_dir);
    const std::string hash = config.spec_hash();
    const std::string ckpt_prefix = config.paths.out_dir + "/" + config.paths.checkpoint;

    TrainState state;
    if (!opt.resume_path.empty()) {
      state = load_checkpoint(opt.resume_path, hash);
      if (state.phase != TrainPhase::solver_free) {
        throw ConfigError("resume: checkpoint is not from solver-free training");
      }
      TrainState fresh = make_initial_state(config.problem, config.network, config.training.seed);
      check_same_layout(state, fresh);
    } else {
      state = make_initial_state(config.problem, config.network, config.training.seed);
    }

    CsvWriter trace(config.paths.out_dir + "/trace.csv",
                    {"iter", "elbo", "residual_term", "lr", "wall_ms"});
    double last_elbo = std::numeric_limits<double>::quiet_NaN();
    TraceSink trace_sink = [&](const TraceRow& row) {
      trace.write_row({static_cast<double>(row.iteration), row.elbo, row.residual_term, row.lr,
                       row.wall_ms});
      if (std::isfinite(row.elbo)) last_elbo = row.elbo;
    };
    CheckpointSink ckpt_sink = [&](const TrainState& s) {
      save_checkpoint(ckpt_prefix, const_cast<TrainState&>(s), hash);
    };

    state = train_loop(config.training, config.problem, std::move(state), trace_sink, ckpt_sink);
    save_checkpoint(ckpt_prefix, state, hash);
    trace.flush();
    std::cout << "trained " << config.training.iterations << " iterations, final ELBO estimate "
              << format_full(last_elbo) << "\n";
    std::cout << "checkpoint: " << ckpt_prefix << ".json\n";
    return kExitOk;
  });
}

int cmd_eval(const CommonOptions& opt) {
  return guarded([&]() {
    ExperimentConfig config = load_with_overrides(opt);
    if (opt.checkpoint_path.empty()) throw ConfigError("--checkpoint is required");
    ensure_out_dir(config.paths.out_dir);
    TrainState state = load_checkpoint(opt.checkpoint_path, config.spec_hash());
    const std::uint64_t seed = opt.seed_override.value_or(config.training.seed);
    const int n_draws = config.evaluation.n_draws;

    json report_json;
    CsvWriter samples(config.paths.out_dir + "/eval_samples.csv",
                      {"draw", "block", "coord", "truth", "mean", "stdev", "sq_err"});
    auto write_samples = [&](const std::vector<SampleRecord>& recs) {
      for (const auto& r : recs) {
        samples.write_mixed_row({std::to_string(r.draw), r.block, std::to_string(r.coord),
                                 format_full(r.truth), format_full(r.mean), format_full(r.stdev),
                                 format_full(r.sq_err)});
      }
    };

    if (config.problem.is_poisson()) {
      EvalReport report = forward_inverse_eval(state, config.problem, n_draws, seed);
      report_json = {{"n_draws", report.n_draws},
                     {"excluded_draws", report.excluded_draws},
                     {"seed", report.seed},
                     {"forward_mnse", report.forward_mnse},
                     {"forward_coverage_2sigma", report.forward_coverage},
                     {"inverse_mnse", report.inverse_mnse},
                     {"inverse_coverage_2sigma", report.inverse_coverage},
                     {"mean_emulator_ms", report.mean_emulator_ms},
                     {"mean_oracle_ms", report.mean_oracle_ms}};
      write_samples(report.samples);
      std::cout << "forward MNSE " << report.forward_mnse << "  inverse MNSE "
                << report.inverse_mnse << "\n";
      std::cout << "coverage 2sigma forward " << report.forward_coverage * 100.0 << "%  inverse "
                << report.inverse_coverage * 100.0 << "%\n";
      std::cout << "mean timings: emulator " << report.mean_emulator_ms << " ms, oracle "
                << report.mean_oracle_ms << " ms\n";
    } else {
      CollocationEvalReport report = collocation_eval(state, config.problem, n_draws, seed);
      report_json = {{"n_draws", report.n_draws},
                     {"seed", report.seed},
                     {"mean_sq_residual", report.mean_sq_residual},
                     {"inverse_mnse", report.inverse_mnse},
                     {"inverse_coverage_2sigma", report.inverse_coverage}};
      write_samples(report.samples);
      std::cout << "mean squared residual " << report.mean_sq_residual << "  inverse MNSE "
                << report.inverse_mnse << "  coverage " << report.inverse_coverage * 100.0
                << "%\n";
    }
    std::ofstream os(config.paths.out_dir + "/eval_report.json");
    if (!os) throw IoError("cannot write eval_report.json");
    os << report_json.dump(2) << "\n";
    return kExitOk;
  });
}

int cmd_predict(const CommonOptions& opt) {
  return guarded([&]() {
    ExperimentConfig config = load_with_overrides(opt);
    if (opt.checkpoint_path.empty()) throw ConfigError("--checkpoint is required");
    if (opt.input_path.empty()) throw ConfigError("--input is required");
    TrainState state = load_checkpoint(opt.checkpoint_path, config.spec_hash());
    const ProblemSpec& spec = config.problem;
    CsvTable input = read_csv(opt.input_path);

    std::ostream* os = &std::cout;
    std::ofstream file;
    if (!opt.output_path.empty()) {
      file.open(opt.output_path, std::ios::trunc);
      if (!file) throw IoError("cannot open '" + opt.output_path + "' for writing");
      os = &file;
    }
    *os << "row,coord,mean,stdev\n";

    const bool forward = opt.direction == "forward";
    if (!forward && opt.direction != "inverse") {
      throw ConfigError("--direction must be forward or inverse");
    }

    for (std::size_t row = 0; row < input.rows.size(); ++row) {
      const auto& cells = input.rows[row];
      Tensor x = Tensor::vector(cells);
      if (forward) {
        if (x.size() != spec.z_dim() + spec.f_dim()) {
          throw ConfigError("input row " + std::to_string(row) + " has " +
                            std::to_string(x.size()) + " values, expected z+f layout of " +
                            std::to_string(spec.z_dim() + spec.f_dim()));
        }
        Tensor z = ad::slice(x, 0, spec.z_dim());
        Tensor f = ad::slice(x, spec.z_dim(), spec.f_dim());
        if (spec.is_poisson()) {
          DiagGaussian g = alpha_apply_poisson(state.alpha, spec, z, f);
          Vandermonde v = chebyshev_vandermonde(spec.solution_order, spec.mesh.nodes,
                                               spec.mesh.domain());
          Tensor var = Tensor::zeros({g.dim()});
          for (std::size_t i = 0; i < var.size(); ++i) var[i] = std::exp(g.logvar[i]);
          MeshGaussian push = pushforward_gaussian(g.mean, var, v);
          for (std::size_t i = 0; i < push.mean.size(); ++i) {
            *os << row << ',' << i << ',' << format_full(push.mean[i]) << ','
                << format_full(std::sqrt(push.cov.at(i, i))) << '\n';
          }
        } else {
          Tensor coords = collocation_coords(spec.grid, GridBlock::interior);
          auto [m, lv] = alpha_apply_points(state.alpha, coords, z);
          for (std::size_t i = 0; i < m.size(); ++i) {
            *os << row << ',' << i << ',' << format_full(m[i]) << ','
                << format_full(std::exp(0.5 * lv[i])) << '\n';
          }
        }
      } else {
        DiagGaussian g;
        if (spec.is_poisson()) {
          if (x.size() != spec.mesh.n_nodes()) {
            throw ConfigError("input row " + std::to_string(row) + " has " +
                              std::to_string(x.size()) + " values, expected nodal field of " +
                              std::to_string(spec.mesh.n_nodes()));
          }
          Tensor c =
              chebyshev_fit(spec.solution_order, spec.mesh.nodes, x, spec.mesh.domain());
          Tensor f = Tensor::zeros({spec.f_dim()});
          for (std::size_t j = 0; j < f.size(); ++j) f[j] = spec.f_prior.mean()[j];
          g = beta_apply_poisson(state.beta, spec, c, f);
        } else {
          if (x.size() != spec.inverse_input_dim()) {
            throw ConfigError("input row " + std::to_string(row) + " has " +
                              std::to_string(x.size()) + " values, expected field picture of " +
                              std::to_string(spec.inverse_input_dim()));
          }
          g = beta_apply_field(state.beta, x);
        }
        for (std::size_t i = 0; i < g.dim(); ++i) {
          *os << row << ',' << i << ',' << format_full(g.mean[i]) << ','
              << format_full(std::exp(0.5 * g.logvar[i])) << '\n';
        }
      }
    }
    return kExitOk;
  });
}

int cmd_observe_train(const CommonOptions& opt) {
  return guarded([&]() {
    ExperimentConfig config = load_with_overrides(opt);
    if (!config.observation) throw ConfigError("config has no 'observation' block");
    if (opt.checkpoint_path.empty()) {
      throw ConfigError("--checkpoint (pretrained forward/inverse heads) is required");
    }
    ensure_out_dir(config.paths.out_dir);
    const ObservationConfig& oc = *config.observation;
    const std::string hash = config.spec_hash();

    TrainState pretrained = load_checkpoint(opt.checkpoint_path, hash);

    ObservationData data;
    if (oc.dataset == "synthetic") {
      SyntheticObservations synth =
          make_synthetic_observations(config.problem, oc.model, oc.n_observations, oc.seed);
      data = synth.data;
      write_observation_csv(config.paths.out_dir + "/observations.csv", data);
      CsvWriter truth(config.paths.out_dir + "/observations_truth.csv", [&]() {
        std::vector<std::string> h;
        for (std::size_t j = 0; j < config.problem.z_dim(); ++j) {
          h.push_back("z_" + std::to_string(j));
        }
        return h;
      }());
      for (std::size_t i = 0; i < synth.z_truth.rows(); ++i) {
        std::vector<double> row;
        for (std::size_t j = 0; j < synth.z_truth.cols(); ++j) {
          row.push_back(synth.z_truth.at(i, j));
        }
        truth.write_row(row);
      }
    } else {
      data = read_observation_csv(oc.dataset, config.problem.f_dim());
    }

    // Fresh encoder; pretrained heads ride along frozen.
    TrainState state;
    state.phase = TrainPhase::observed;
    state.alpha = pretrained.alpha;
    state.beta = pretrained.beta;
    RandomStream init_rng(oc.seed);
    const std::size_t y_dim = oc.model.out_dim(config.problem.mesh.n_nodes());
    std::vector<std::size_t> hidden(config.network.hidden_depth, config.network.hidden_width);
    state.phi = make_head(y_dim, hidden, config.problem.solution_dim(),
                          config.network.activation, init_rng, config.network.lv_min,
                          config.network.lv_max);
    state.rng = init_rng;
    state.opt = AdamState::like(trainable_params(state));
    state.lr = oc.learning_rate;

    TrainConfig tc = config.training;
    tc.iterations = oc.iterations;
    tc.learning_rate = oc.learning_rate;
    tc.seed = oc.seed;

    CsvWriter trace(config.paths.out_dir + "/observe_trace.csv",
                    {"iter", "elbo", "residual_term", "lr", "wall_ms"});
    TraceSink trace_sink = [&](const TraceRow& row) {
      trace.write_row({static_cast<double>(row.iteration), row.elbo, row.residual_term, row.lr,
                       row.wall_ms});
    };
    const std::string prefix = config.paths.out_dir + "/observe_checkpoint";
    CheckpointSink ckpt_sink = [&](const TrainState& s) {
      save_checkpoint(prefix, const_cast<TrainState&>(s), hash);
    };

    state = train_loop(tc, config.problem, std::move(state), trace_sink, ckpt_sink, &oc.model,
                       &data);
    save_checkpoint(prefix, state, hash);
    std::cout << "encoder trained for " << oc.iterations << " iterations over "
              << data.y.rows() << " observations\n";
    std::cout << "checkpoint: " << prefix << ".json\n";
    return kExitOk;
  });
}

int cmd_observe_infer(const CommonOptions& opt) {
  return guarded([&]() {
    ExperimentConfig config = load_with_overrides(opt);
    if (!config.observation) throw ConfigError("config has no 'observation' block");
    if (opt.checkpoint_path.empty()) throw ConfigError("--checkpoint (with encoder) is required");
    if (opt.input_path.empty()) throw ConfigError("--input (f+y rows) is required");
    ensure_out_dir(config.paths.out_dir);
    TrainState state = load_checkpoint(opt.checkpoint_path, config.spec_hash());
    if (!state.phi) throw ConfigError("checkpoint has no encoder head");

    ObservationData data = read_observation_csv(opt.input_path, config.problem.f_dim());
    const int n_samples = config.evaluation.posterior_samples;
    const std::uint64_t seed = opt.seed_override.value_or(config.observation->seed);

    CsvWriter post(config.paths.out_dir + "/posterior.csv", {"row", "coord", "mean", "stdev"});
    CsvWriter comps(config.paths.out_dir + "/posterior_components.csv",
                    {"row", "sample", "coord", "mean", "stdev"});
    for (std::size_t i = 0; i < data.y.rows(); ++i) {
      Tensor y = Tensor::zeros({data.y.cols()});
      for (std::size_t j = 0; j < y.size(); ++j) y[j] = data.y.at(i, j);
      Tensor f = Tensor::zeros({data.f.cols()});
      for (std::size_t j = 0; j < f.size(); ++j) f[j] = data.f.at(i, j);
      RandomStream rng(seed + i);
      MixturePosterior mix =
          marginal_posterior_z(*state.phi, state.beta, config.problem, y, f, n_samples, rng);
      for (std::size_t c = 0; c < mix.mean.size(); ++c) {
        post.write_row({static_cast<double>(i), static_cast<double>(c), mix.mean[c],
                        std::sqrt(mix.var_diag[c])});
      }
      for (std::size_t s = 0; s < mix.components.size(); ++s) {
        for (std::size_t c = 0; c < mix.components[s].dim(); ++c) {
          comps.write_row({static_cast<double>(i), static_cast<double>(s),
                           static_cast<double>(c), mix.components[s].mean[c],
                           std::exp(0.5 * mix.components[s].logvar[c])});
        }
      }
    }
    std::cout << "posteriors for " << data.y.rows() << " observations written to "
              << config.paths.out_dir << "\n";
    return kExitOk;
  });
}

int cmd_scan(const CommonOptions& opt) {
  return guarded([&]() {
    ExperimentConfig config = load_with_overrides(opt);
    if (!config.evaluation.scan) throw ConfigError("config has no 'evaluation.scan' block");
    if (opt.checkpoint_path.empty()) throw ConfigError("--checkpoint is required");
    ensure_out_dir(config.paths.out_dir);
    TrainState state = load_checkpoint(opt.checkpoint_path, config.spec_hash());

    ScanResult scan = residual_grid_scan(state.alpha, config.problem,
                                         config.evaluation.scan->gamma_values,
                                         config.evaluation.scan->kappa_values);
    CsvWriter out(config.paths.out_dir + "/scan.csv",
                  {"gamma", "kappa", "log10_mean_residual", "log10_mean_stdev"});
    for (std::size_t i = 0; i < scan.gamma.size(); ++i) {
      out.write_row({scan.gamma[i], scan.kappa[i], scan.log10_mean_residual[i],
                     scan.log10_mean_stdev[i]});
    }
    std::cout << scan.gamma.size() << " scan cells written to " << config.paths.out_dir
              << "/scan.csv\n";
    return kExitOk;
  });
}

int cmd_sweep(const CommonOptions& opt) {
  return guarded([&]() {
    ExperimentConfig config = load_with_overrides(opt);
    if (!config.evaluation.sweep) throw ConfigError("config has no 'evaluation.sweep' block");
    ensure_out_dir(config.paths.out_dir);
    const SweepConfig& sw = *config.evaluation.sweep;

    TrainConfig tc = config.training;
    tc.iterations = sw.iterations;

    // One trace file per (epsilon, seed) run.
    std::map<std::pair<double, std::uint64_t>, std::unique_ptr<CsvWriter>> traces;
    SweepTraceSink sink = [&](double eps, std::uint64_t seed, const TraceRow& row) {
      auto key = std::make_pair(eps, seed);
      auto it = traces.find(key);
      if (it == traces.end()) {
        const std::string name = config.paths.out_dir + "/sweep_trace_eps" +
                                 format_full(eps) + "_seed" + std::to_string(seed) + ".csv";
        it = traces.emplace(key, std::make_unique<CsvWriter>(
                                     name, std::vector<std::string>{"iter", "elbo",
                                                                    "residual_term", "lr",
                                                                    "wall_ms"}))
                 .first;
      }
      it->second->write_row({static_cast<double>(row.iteration), row.elbo, row.residual_term,
                             row.lr, row.wall_ms});
    };

    auto rows = epsilon_sweep(config.problem, config.network, tc, sw.eps_values, sw.seeds,
                              sw.n_draws, sink);
    CsvWriter out(config.paths.out_dir + "/sweep.csv",
                  {"epsilon", "seed", "final_forward_mnse", "status"});
    for (const auto& r : rows) {
      out.write_mixed_row({format_full(r.eps), std::to_string(r.seed),
                           format_full(r.final_forward_mnse), r.ok ? "ok" : "nan_abort"});
    }
    std::cout << rows.size() << " sweep rows written to " << config.paths.out_dir
              << "/sweep.csv\n";
    return kExitOk;
  });
}

}  // namespace wrvi::cli
