#include "wrvi/eval/experiments.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>

#include "wrvi/basis/unscented.hpp"
#include "wrvi/util/parallel.hpp"

namespace wrvi {

using ad::Tensor;

namespace {

double ms_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::vector<std::size_t> hidden_layers(const NetworkShape& net) {
  return std::vector<std::size_t>(net.hidden_depth, net.hidden_width);
}

}  // namespace

TrainState make_initial_state(const ProblemSpec& spec, const NetworkShape& net,
                              std::uint64_t seed, bool with_phi, const ObservationModel* obs) {
  spec.validate();
  RandomStream rng(seed);
  TrainState state;
  state.phase = TrainPhase::solver_free;

  const std::size_t dz = spec.z_dim();
  const std::size_t df = spec.f_dim();
  std::size_t a_in = 0, a_out = 0, b_in = 0;
  if (spec.is_poisson()) {
    a_in = dz + df;
    a_out = spec.solution_dim();
    b_in = spec.solution_dim() + df;
  } else {
    a_in = 2 + dz;  // pointwise (x, t, z)
    a_out = 1;
    b_in = spec.inverse_input_dim();
  }
  auto hidden = hidden_layers(net);
  state.alpha = make_head(a_in, hidden, a_out, net.activation, rng, net.lv_min, net.lv_max);
  state.beta = make_head(b_in, hidden, dz, net.activation, rng, net.lv_min, net.lv_max);
  if (with_phi) {
    if (!spec.is_poisson() || obs == nullptr) {
      throw ConfigError("encoder head requires a Galerkin problem and an observation model");
    }
    const std::size_t y_dim = obs->out_dim(spec.mesh.n_nodes());
    state.phi =
        make_head(y_dim, hidden, spec.solution_dim(), net.activation, rng, net.lv_min,
                  net.lv_max);
  }
  state.rng = rng;
  state.opt = AdamState::like(trainable_params(state));
  return state;
}

namespace {

struct DrawOutcome {
  bool ok = false;
  std::vector<double> fwd_truth, fwd_mean, fwd_stdev;
  std::vector<double> kappa_truth, kappa_rec, kappa_stdev;
  std::vector<std::pair<std::size_t, std::array<double, 3>>> z_records;  // coord: truth,mean,sd
  double emu_ms = 0.0, oracle_ms = 0.0;
};

}  // namespace

EvalReport forward_inverse_eval(TrainState& state, const ProblemSpec& spec, int n_draws,
                                std::uint64_t seed) {
  if (!spec.is_poisson()) {
    throw ConfigError("forward_inverse_eval: requires a Galerkin problem (use collocation_eval)");
  }
  spec.validate();
  PoissonWorkspace ws = make_poisson_workspace(spec);
  Vandermonde v_sol = chebyshev_vandermonde(spec.solution_order, spec.mesh.nodes,
                                            spec.mesh.domain());
  const auto [k_off, k_size] = spec.z_prior.block_range("kappa");
  Vandermonde v_kap =
      chebyshev_vandermonde(spec.kappa_order, spec.mesh.nodes, spec.mesh.domain());

  EvalReport report;
  report.n_draws = n_draws;
  report.seed = seed;
  const std::size_t nn = spec.mesh.n_nodes();

  // Draws are independent with per-draw streams (seed + draw index), so
  // parallel evaluation reproduces the serial output exactly.
  std::vector<DrawOutcome> outcomes(static_cast<std::size_t>(std::max(0, n_draws)));
  parallel_for(n_draws, eval_thread_cap(), [&](int draw) {
    DrawOutcome& out = outcomes[static_cast<std::size_t>(draw)];
    RandomStream rng(seed + static_cast<std::uint64_t>(draw));
    Tensor z = spec.z_prior.sample(rng);
    Tensor f = spec.f_prior.sample(rng);

    Tensor u_star;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      u_star = newton_solve(spec, ws, z, f, Tensor::zeros({nn}), 1e-10, 50).u;
    } catch (const NumericError&) {
      return;  // oracle divergence: draw excluded and counted
    }
    out.oracle_ms = ms_since(t0);

    // Emulator clock covers only the forward prediction path.
    const auto t1 = std::chrono::steady_clock::now();
    DiagGaussian fg = alpha_apply_poisson(state.alpha, spec, z, f);
    Tensor fvar = Tensor::zeros({fg.dim()});
    for (std::size_t i = 0; i < fvar.size(); ++i) fvar[i] = std::exp(fg.logvar[i]);
    MeshGaussian push = pushforward_gaussian(fg.mean, fvar, v_sol);
    out.emu_ms = ms_since(t1);

    out.fwd_truth.resize(nn);
    out.fwd_mean.resize(nn);
    out.fwd_stdev.resize(nn);
    for (std::size_t i = 0; i < nn; ++i) {
      out.fwd_truth[i] = u_star[i];
      out.fwd_mean[i] = push.mean[i];
      out.fwd_stdev[i] = std::sqrt(push.cov.at(i, i));
    }

    // Inverse direction: oracle field projected onto the inverse input
    // layout, reconstruction compared in kappa-field space.
    Tensor c = chebyshev_fit(spec.solution_order, spec.mesh.nodes, u_star, spec.mesh.domain());
    DiagGaussian bz = beta_apply_poisson(state.beta, spec, c, f);

    Tensor kappa_truth = kappa_field_value(spec, z, spec.mesh.nodes);
    Tensor kappa_rec = kappa_field_value(spec, bz.mean, spec.mesh.nodes);
    Tensor kz_mean = ad::slice(bz.mean, k_off, k_size);
    Tensor kz_var = Tensor::zeros({k_size});
    for (std::size_t i = 0; i < k_size; ++i) kz_var[i] = std::exp(bz.logvar[k_off + i]);
    MeshGaussian kpush = pushforward_gaussian(kz_mean, kz_var, v_kap);
    UnscentedMoments kmom =
        unscented_moments(kpush.mean, kpush.cov_diagonal(), [&](double x) {
          return apply_transform(spec.kappa_transform, x);
        });

    out.kappa_truth.resize(nn);
    out.kappa_rec.resize(nn);
    out.kappa_stdev.resize(nn);
    for (std::size_t i = 0; i < nn; ++i) {
      out.kappa_truth[i] = kappa_truth[i];
      out.kappa_rec[i] = kappa_rec[i];
      out.kappa_stdev[i] = std::sqrt(std::max(0.0, kmom.cov_diag[i]));
    }

    std::size_t off = 0;
    for (const auto& block : spec.z_prior.blocks) {
      if (block.kind != PriorBlock::Kind::delta) {
        for (std::size_t i = 0; i < block.size; ++i) {
          const std::size_t j = off + i;
          out.z_records.push_back(
              {j, {z[j], bz.mean[j], std::exp(0.5 * bz.logvar[j])}});
        }
      }
      off += block.size;
    }
    out.ok = true;
  });

  std::vector<std::vector<double>> fwd_truth_rows, fwd_mean_rows;
  std::vector<std::vector<double>> inv_truth_rows, inv_mean_rows;
  std::vector<double> fwd_cov_truth, fwd_cov_mean, fwd_cov_stdev;
  std::vector<double> invz_truth, invz_mean, invz_stdev;
  double emu_ms = 0.0, oracle_ms = 0.0;
  int included = 0;

  for (int draw = 0; draw < n_draws; ++draw) {
    DrawOutcome& out = outcomes[static_cast<std::size_t>(draw)];
    if (!out.ok) {
      ++report.excluded_draws;
      continue;
    }
    for (std::size_t i = 0; i < nn; ++i) {
      fwd_cov_truth.push_back(out.fwd_truth[i]);
      fwd_cov_mean.push_back(out.fwd_mean[i]);
      fwd_cov_stdev.push_back(out.fwd_stdev[i]);
      const double d = out.fwd_truth[i] - out.fwd_mean[i];
      report.samples.push_back(SampleRecord{draw, "forward_u", static_cast<int>(i),
                                            out.fwd_truth[i], out.fwd_mean[i], out.fwd_stdev[i],
                                            d * d});
    }
    fwd_truth_rows.push_back(out.fwd_truth);
    fwd_mean_rows.push_back(out.fwd_mean);

    for (std::size_t i = 0; i < nn; ++i) {
      const double d = out.kappa_truth[i] - out.kappa_rec[i];
      report.samples.push_back(SampleRecord{draw, "inverse_kappa_field", static_cast<int>(i),
                                            out.kappa_truth[i], out.kappa_rec[i],
                                            out.kappa_stdev[i], d * d});
    }
    inv_truth_rows.push_back(out.kappa_truth);
    inv_mean_rows.push_back(out.kappa_rec);

    for (const auto& [coord, tms] : out.z_records) {
      invz_truth.push_back(tms[0]);
      invz_mean.push_back(tms[1]);
      invz_stdev.push_back(tms[2]);
      const double d = tms[0] - tms[1];
      report.samples.push_back(
          SampleRecord{draw, "inverse_z", static_cast<int>(coord), tms[0], tms[1], tms[2], d * d});
    }

    emu_ms += out.emu_ms;
    oracle_ms += out.oracle_ms;
    ++included;
  }

  if (included > 0) {
    auto pack = [](const std::vector<std::vector<double>>& rows) {
      const std::size_t r = rows.size(), c = rows.front().size();
      Tensor t = Tensor::zeros({r, c});
      for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) t.at(i, j) = rows[i][j];
      }
      return t;
    };
    report.forward_mnse = mnse(pack(fwd_truth_rows), pack(fwd_mean_rows));
    report.inverse_mnse = mnse(pack(inv_truth_rows), pack(inv_mean_rows));
    report.forward_coverage = coverage_2sigma(Tensor::vector(fwd_cov_truth),
                                              Tensor::vector(fwd_cov_mean),
                                              Tensor::vector(fwd_cov_stdev));
    report.inverse_coverage = coverage_2sigma(Tensor::vector(invz_truth),
                                              Tensor::vector(invz_mean),
                                              Tensor::vector(invz_stdev));
    report.mean_emulator_ms = emu_ms / included;
    report.mean_oracle_ms = oracle_ms / included;
  }
  return report;
}

CollocationEvalReport collocation_eval(TrainState& state, const ProblemSpec& spec, int n_draws,
                                       std::uint64_t seed) {
  if (!spec.is_collocation()) {
    throw ConfigError("collocation_eval: requires a collocation problem");
  }
  spec.validate();
  CollocationEvalReport report;
  report.n_draws = n_draws;
  report.seed = seed;

  std::vector<double> zt, zm, zs;
  std::vector<std::vector<double>> z_truth_rows, z_mean_rows;
  double msr_acc = 0.0;

  for (int draw = 0; draw < n_draws; ++draw) {
    RandomStream rng(seed + static_cast<std::uint64_t>(draw));
    Tensor z = spec.z_prior.sample(rng);
    MeanFieldJet jet = alpha_mean_field_jet(state.alpha, spec, z);

    double msr = 0.0;
    const std::size_t ni = spec.grid.n_interior();
    if (spec.kind == PdeKind::heat_collocation) {
      const double kappa = z[spec.z_prior.block_range("kappa").first];
      const double gamma = z[spec.z_prior.block_range("gamma").first];
      for (std::size_t i = 0; i < ni; ++i) {
        FieldJet j{jet.u[i], jet.u_t[i], jet.u_x[i], jet.u_xx[i], jet.u_tt[i]};
        const double r = heat_domain_row(j, kappa, gamma);
        msr += r * r;
      }
    } else {
      const auto [a_off, a_size] = spec.z_prior.block_range("forcing_a");
      Tensor a = ad::slice(z, a_off, a_size);
      for (std::size_t i = 0; i < ni; ++i) {
        FieldJet j{jet.u[i], jet.u_t[i], jet.u_x[i], jet.u_xx[i], jet.u_tt[i]};
        const double r = wave_domain_row(j, spec.grid.xi[i], a);
        msr += r * r;
      }
    }
    msr /= static_cast<double>(ni);
    msr_acc += msr;

    DiagGaussian bz = beta_apply_field(state.beta, jet.u);
    std::vector<double> truth_row(z.size()), mean_row(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double sd = std::exp(0.5 * bz.logvar[i]);
      truth_row[i] = z[i];
      mean_row[i] = bz.mean[i];
      zt.push_back(z[i]);
      zm.push_back(bz.mean[i]);
      zs.push_back(sd);
      SampleRecord rec{draw, "inverse_z", static_cast<int>(i), z[i], bz.mean[i], sd,
                       (z[i] - bz.mean[i]) * (z[i] - bz.mean[i])};
      report.samples.push_back(rec);
    }
    z_truth_rows.push_back(std::move(truth_row));
    z_mean_rows.push_back(std::move(mean_row));
  }

  if (n_draws > 0) {
    report.mean_sq_residual = msr_acc / n_draws;
    const std::size_t r = z_truth_rows.size(), c = z_truth_rows.front().size();
    Tensor t = Tensor::zeros({r, c});
    Tensor m = Tensor::zeros({r, c});
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < c; ++j) {
        t.at(i, j) = z_truth_rows[i][j];
        m.at(i, j) = z_mean_rows[i][j];
      }
    }
    report.inverse_mnse = mnse(t, m);
    report.inverse_coverage =
        coverage_2sigma(Tensor::vector(zt), Tensor::vector(zm), Tensor::vector(zs));
  }
  return report;
}

ScanResult residual_grid_scan(const HeadParams& alpha, const ProblemSpec& spec,
                              const std::vector<double>& gamma_values,
                              const std::vector<double>& kappa_values) {
  if (spec.kind != PdeKind::heat_collocation) {
    throw ConfigError("residual_grid_scan: defined for the heat problem's (gamma, kappa) plane");
  }
  spec.validate();
  const auto k_off = spec.z_prior.block_range("kappa").first;
  const auto g_off = spec.z_prior.block_range("gamma").first;
  constexpr double kFloor = 1e-30;

  ScanResult out;
  for (double gamma : gamma_values) {
    for (double kappa : kappa_values) {
      if (!(kappa > 0.0)) {
        throw NumericError("residual_grid_scan: kappa must be positive, got " +
                           std::to_string(kappa));
      }
      Tensor z = Tensor::zeros({spec.z_dim()});
      z[k_off] = kappa;
      z[g_off] = gamma;
      MeanFieldJet jet = alpha_mean_field_jet(alpha, spec, z);
      double msr = 0.0, mstd = 0.0;
      const std::size_t ni = spec.grid.n_interior();
      for (std::size_t i = 0; i < ni; ++i) {
        FieldJet j{jet.u[i], jet.u_t[i], jet.u_x[i], jet.u_xx[i], jet.u_tt[i]};
        const double r = heat_domain_row(j, kappa, gamma);
        msr += r * r;
        mstd += jet.stdev[i];
      }
      msr /= static_cast<double>(ni);
      mstd /= static_cast<double>(ni);
      out.gamma.push_back(gamma);
      out.kappa.push_back(kappa);
      out.log10_mean_residual.push_back(std::log10(std::max(msr, kFloor)));
      out.log10_mean_stdev.push_back(std::log10(std::max(mstd, kFloor)));
    }
  }
  return out;
}

std::vector<SweepRow> epsilon_sweep(const ProblemSpec& base_spec, const NetworkShape& net,
                                    const TrainConfig& base_config,
                                    const std::vector<double>& eps_values,
                                    const std::vector<std::uint64_t>& seeds, int eval_draws,
                                    const SweepTraceSink& trace) {
  if (eps_values.empty()) throw ConfigError("epsilon_sweep: need at least one epsilon value");
  for (double e : eps_values) {
    if (!(e > 0.0)) throw ConfigError("epsilon_sweep: epsilon values must be positive");
  }
  std::vector<SweepRow> rows;
  for (double eps : eps_values) {
    for (std::uint64_t seed : seeds) {
      ProblemSpec spec = base_spec;
      spec.residual_cov = ResidualCovariance{};
      spec.residual_cov.uniform = true;
      spec.residual_cov.eps_u = eps;
      TrainConfig config = base_config;
      config.seed = seed;
      SweepRow row{eps, seed, 0.0, true};
      try {
        TrainState state = make_initial_state(spec, net, seed);
        TraceSink sink;
        if (trace) {
          sink = [&](const TraceRow& t) { trace(eps, seed, t); };
        }
        state = train_loop(config, spec, std::move(state), sink);
        EvalReport report = forward_inverse_eval(state, spec, eval_draws, seed);
        row.final_forward_mnse = report.forward_mnse;
      } catch (const NumericError&) {
        row.ok = false;  // flagged; remaining runs proceed
      }
      rows.push_back(row);
    }
  }
  return rows;
}

SyntheticObservations make_synthetic_observations(const ProblemSpec& spec,
                                                  const ObservationModel& model, int n,
                                                  std::uint64_t seed) {
  if (!spec.is_poisson()) {
    throw ConfigError("synthetic observations: requires a Galerkin problem");
  }
  spec.validate();
  model.validate();
  PoissonWorkspace ws = make_poisson_workspace(spec);
  const std::size_t nn = spec.mesh.n_nodes();
  const std::size_t dy = model.out_dim(nn);
  SyntheticObservations out;
  out.data.y = Tensor::zeros({static_cast<std::size_t>(n), dy});
  out.data.f = Tensor::zeros({static_cast<std::size_t>(n), spec.f_dim()});
  out.z_truth = Tensor::zeros({static_cast<std::size_t>(n), spec.z_dim()});
  out.u_truth = Tensor::zeros({static_cast<std::size_t>(n), nn});
  for (int i = 0; i < n; ++i) {
    RandomStream rng(seed + static_cast<std::uint64_t>(i));
    Tensor z = spec.z_prior.sample(rng);
    Tensor f = spec.f_prior.sample(rng);
    Tensor u = newton_solve(spec, ws, z, f, Tensor::zeros({nn}), 1e-10, 50).u;
    Tensor y = model.apply(u);
    for (std::size_t j = 0; j < dy; ++j) {
      out.data.y.at(static_cast<std::size_t>(i), j) = y[j] + model.sigma_y * rng.normal();
    }
    for (std::size_t j = 0; j < spec.f_dim(); ++j) out.data.f.at(i, j) = f[j];
    for (std::size_t j = 0; j < spec.z_dim(); ++j) out.z_truth.at(i, j) = z[j];
    for (std::size_t j = 0; j < nn; ++j) out.u_truth.at(i, j) = u[j];
  }
  return out;
}

}  // namespace wrvi
