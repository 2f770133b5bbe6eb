#include "wrvi/train/elbo.hpp"

#include <cmath>

namespace wrvi {

using ad::Dual;
using ad::Dual2;
using ad::DualT;
using ad::Tape;
using ad::Tensor;
using ad::Var;

ProblemHandles ProblemHandles::make(const ProblemSpec& spec) {
  spec.validate();
  ProblemHandles h;
  h.spec = &spec;
  if (spec.is_poisson()) {
    h.poisson = make_poisson_workspace(spec);
    if (spec.precondition) h.precond = make_preconditioner(spec, *h.poisson);
  }
  return h;
}

namespace {

Var as_column(Var v) { return reshape(v, {v.value().size(), 1}); }
Var as_flat(Var v) { return reshape(v, {v.value().size()}); }

// log N(0; r, Sigma) for the stacked residual with constant block weights.
Var residual_log_likelihood(Tape& tape, const ProblemSpec& spec, Var r) {
  std::size_t nd = 0, nb = 0, ni = 0;
  if (spec.is_poisson()) {
    nd = spec.mesh.n_nodes();
  } else {
    nd = spec.grid.n_interior();
    nb = spec.grid.n_boundary();
    ni = spec.residual_dim() - nd - nb;
  }
  Tensor w = spec.residual_cov.inverse_variance(nd, nb, ni);
  const double logdet = spec.residual_cov.log_det(nd, nb, ni);
  const double d = static_cast<double>(w.size());
  Var quad = sum(square(r) * tape.constant(w));
  return -0.5 * quad - 0.5 * (logdet + d * kLn2Pi);
}

struct SampleTerms {
  Var integrand;
  Var residual_term;
  double prior_term = 0.0;  // -log p(z), reported only
};

SampleTerms poisson_sample_terms(Tape& tape, const ProblemHandles& handles,
                                 const HeadVars& alpha, const HeadVars& beta, RandomStream& rng) {
  const ProblemSpec& spec = *handles.spec;
  const std::size_t du = spec.solution_dim();
  const std::size_t dz = spec.z_dim();

  Tensor z = spec.z_prior.sample(rng);
  Tensor f = spec.f_prior.sample(rng);
  Tensor eps = standard_normal(du, rng);

  Var zc = tape.constant(z);
  Var fc = tape.constant(f);

  Var ain = reshape(ad::concat({zc, fc}), {1, dz + spec.f_dim()});
  auto aout = head_apply(alpha, ain);
  Var mu = as_flat(aout.mean);
  Var lv = as_flat(aout.logvar);
  Var u = sample_reparam(mu, lv, tape.constant(eps));

  Var v_solution = tape.constant(handles.poisson->v_solution);
  Var u_nodal = as_flat(matmul(v_solution, as_column(u)));
  Var r = assemble_poisson_residual(spec, *handles.poisson, u_nodal, zc, fc);
  if (handles.precond) r = precondition_residual(*handles.precond, r);

  Var loglik = residual_log_likelihood(tape, spec, r);

  Var bin = reshape(ad::concat({u, fc}), {1, du + spec.f_dim()});
  auto bout = head_apply(beta, bin);
  Var logpb = gaussian_log_density(zc, as_flat(bout.mean), as_flat(bout.logvar));
  Var logq = gaussian_log_density(u, mu, lv);

  SampleTerms terms{loglik + logpb - logq, loglik, -spec.z_prior.log_density(z)};
  return terms;
}

struct BlockEval {
  Var mean;    // [n]
  Var logvar;  // [n]
};

Var point_input(Tape& tape, const Tensor& coords, Var z) {
  Var c = tape.constant(coords);
  Var zb = col_broadcast(z, coords.rows());
  return concat_cols(c, zb);
}

Tensor direction_matrix(std::size_t n, std::size_t width, std::size_t column) {
  Tensor e = Tensor::zeros({n, width});
  for (std::size_t i = 0; i < n; ++i) e.at(i, column) = 1.0;
  return e;
}

BlockEval eval_block_plain(Tape& tape, const HeadVars& alpha, const ProblemSpec& spec,
                           GridBlock block, Var z) {
  Tensor coords = collocation_coords(spec.grid, block);
  Var x = point_input(tape, coords, z);
  auto out = head_apply(alpha, x);
  return {as_flat(out.mean), as_flat(out.logvar)};
}

SampleTerms collocation_sample_terms(Tape& tape, const ProblemHandles& handles,
                                     const HeadVars& alpha, const HeadVars& beta,
                                     RandomStream& rng) {
  const ProblemSpec& spec = *handles.spec;
  const auto& grid = spec.grid;
  const bool wave = spec.kind == PdeKind::wave_collocation;

  Tensor z = spec.z_prior.sample(rng);
  Var zc = tape.constant(z);

  const std::size_t ni = grid.n_interior();
  const std::size_t width = 2 + spec.z_dim();
  Tensor coords_i = collocation_coords(grid, GridBlock::interior);
  Var xi = point_input(tape, coords_i, zc);
  Var ex = tape.constant(direction_matrix(ni, width, 0));
  Var et = tape.constant(direction_matrix(ni, width, 1));

  // Forward tangents through the forward head's mean give the interior
  // derivatives; the noise sample rides on the primal values only.
  Dual2 in_xx{Dual{xi, ex}, Dual{ex, ad::zeros_like(ex)}};
  auto out_xx = head_apply(alpha, in_xx);
  Var mu_i = as_flat(out_xx.mean.v.v);
  Var mu_x = as_flat(out_xx.mean.v.t);
  Var mu_xx = as_flat(out_xx.mean.t.t);
  Var lv_i = as_flat(out_xx.logvar);

  Var mu_t, mu_tt;
  if (wave) {
    Dual2 in_tt{Dual{xi, et}, Dual{et, ad::zeros_like(et)}};
    auto out_tt = head_apply(alpha, in_tt);
    mu_tt = as_flat(out_tt.mean.t.t);
    mu_t = as_flat(out_tt.mean.v.t);
  } else {
    auto out_t = head_apply(alpha, Dual{xi, et});
    mu_t = as_flat(out_t.mean.t);
  }

  BlockEval bnd = eval_block_plain(tape, alpha, spec, GridBlock::boundary, zc);
  BlockEval ini_plain{};
  Var ini_mean, ini_logvar, ini_ut;
  if (wave) {
    Tensor coords_c = collocation_coords(grid, GridBlock::initial);
    Var xc = point_input(tape, coords_c, zc);
    Var etc = tape.constant(direction_matrix(grid.n_initial(), width, 1));
    auto out_c = head_apply(alpha, Dual{xc, etc});
    ini_mean = as_flat(out_c.mean.v);
    ini_ut = as_flat(out_c.mean.t);
    ini_logvar = as_flat(out_c.logvar);
  } else {
    ini_plain = eval_block_plain(tape, alpha, spec, GridBlock::initial, zc);
    ini_mean = ini_plain.mean;
    ini_logvar = ini_plain.logvar;
  }

  Tensor eps_i = standard_normal(ni, rng);
  Tensor eps_b = standard_normal(grid.n_boundary(), rng);
  Tensor eps_c = standard_normal(grid.n_initial(), rng);
  Var u_i = sample_reparam(mu_i, lv_i, tape.constant(eps_i));
  Var u_b = sample_reparam(bnd.mean, bnd.logvar, tape.constant(eps_b));
  Var u_c = sample_reparam(ini_mean, ini_logvar, tape.constant(eps_c));

  CollocationVars cv;
  cv.u_interior = u_i;
  cv.ut_interior = mu_t;
  cv.ux_interior = mu_x;
  cv.uxx_interior = mu_xx;
  cv.utt_interior = mu_tt;
  cv.u_boundary = u_b;
  cv.u_initial = u_c;
  cv.ut_initial = ini_ut;

  Var r = collocation_residual_taped(spec, tape, cv, zc);
  Var loglik = residual_log_likelihood(tape, spec, r);

  Var bin = reshape(u_i, {1, ni});
  auto bout = head_apply(beta, bin);
  Var logpb = gaussian_log_density(zc, as_flat(bout.mean), as_flat(bout.logvar));

  Var logq = gaussian_log_density(u_i, mu_i, lv_i) + gaussian_log_density(u_b, bnd.mean, bnd.logvar) +
             gaussian_log_density(u_c, ini_mean, ini_logvar);

  SampleTerms terms{loglik + logpb - logq, loglik, -spec.z_prior.log_density(z)};
  return terms;
}

}  // namespace

ElboEstimate build_solver_free_elbo(Tape& tape, const ProblemHandles& handles,
                                    const HeadVars& alpha, const HeadVars& beta, RandomStream& rng,
                                    int n_samples, bool include_prior_constants) {
  if (n_samples < 1) throw ConfigError("build_solver_free_elbo: n_samples must be >= 1");
  const ProblemSpec& spec = *handles.spec;

  Var acc, racc;
  double prior_acc = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    SampleTerms terms = spec.is_poisson()
                            ? poisson_sample_terms(tape, handles, alpha, beta, rng)
                            : collocation_sample_terms(tape, handles, alpha, beta, rng);
    if (i == 0) {
      acc = terms.integrand;
      racc = terms.residual_term;
    } else {
      acc = acc + terms.integrand;
      racc = racc + terms.residual_term;
    }
    prior_acc += terms.prior_term;
  }
  const double inv_n = 1.0 / static_cast<double>(n_samples);
  Var value = acc * inv_n;
  Var residual_term = racc * inv_n;
  if (include_prior_constants) value = value + prior_acc * inv_n;
  if (!value.value().all_finite()) {
    throw NumericError("solver-free objective: non-finite estimate");
  }
  return {value, residual_term};
}

// ---- value-land application ----

DiagGaussian alpha_apply_poisson(const HeadParams& alpha, const ProblemSpec& spec,
                                 const Tensor& z, const Tensor& f) {
  if (z.size() != spec.z_dim() || f.size() != spec.f_dim()) {
    throw ShapeError("alpha_apply_poisson: z/f layout mismatch (" + std::to_string(z.size()) +
                     "," + std::to_string(f.size()) + ") vs (" + std::to_string(spec.z_dim()) +
                     "," + std::to_string(spec.f_dim()) + ")");
  }
  return head_apply_value(alpha, ad::concat({z, f}));
}

DiagGaussian beta_apply_poisson(const HeadParams& beta, const ProblemSpec& spec,
                                const Tensor& u_coeffs, const Tensor& f) {
  if (u_coeffs.size() != spec.solution_dim() || f.size() != spec.f_dim()) {
    throw ShapeError("beta_apply_poisson: input layout mismatch");
  }
  return head_apply_value(beta, ad::concat({u_coeffs, f}));
}

Tensor collocation_coords(const CollocationGrid& grid, GridBlock block) {
  const std::vector<double>* xs = nullptr;
  const std::vector<double>* ts = nullptr;
  switch (block) {
    case GridBlock::interior: xs = &grid.xi; ts = &grid.ti; break;
    case GridBlock::boundary: xs = &grid.xb; ts = &grid.tb; break;
    case GridBlock::initial: xs = &grid.xc; ts = &grid.tc; break;
  }
  const std::size_t n = xs->size();
  Tensor coords = Tensor::zeros({n, 2});
  for (std::size_t i = 0; i < n; ++i) {
    coords.at(i, 0) = (*xs)[i];
    coords.at(i, 1) = (*ts)[i];
  }
  return coords;
}

std::pair<Tensor, Tensor> alpha_apply_points(const HeadParams& alpha, const Tensor& coords,
                                             const Tensor& z) {
  const std::size_t n = coords.rows();
  Tensor input = ad::concat_cols(coords, ad::col_broadcast(z, n));
  auto [m, lv] = head_apply_value_batch(alpha, input);
  return {ad::reshape(m, {n}), ad::reshape(lv, {n})};
}

DiagGaussian beta_apply_field(const HeadParams& beta, const Tensor& field_values) {
  return head_apply_value(beta, field_values);
}

MeanFieldJet alpha_mean_field_jet(const HeadParams& alpha, const ProblemSpec& spec,
                                  const Tensor& z) {
  Tape tape;
  HeadVars av = lift(tape, alpha);
  Var zc = tape.constant(z);
  const std::size_t ni = spec.grid.n_interior();
  const std::size_t width = 2 + spec.z_dim();

  Tensor coords = collocation_coords(spec.grid, GridBlock::interior);
  Var xi = point_input(tape, coords, zc);
  Var ex = tape.constant(direction_matrix(ni, width, 0));
  Var et = tape.constant(direction_matrix(ni, width, 1));

  Dual2 in_xx{Dual{xi, ex}, Dual{ex, ad::zeros_like(ex)}};
  auto out_xx = head_apply(av, in_xx);
  Dual2 in_tt{Dual{xi, et}, Dual{et, ad::zeros_like(et)}};
  auto out_tt = head_apply(av, in_tt);

  MeanFieldJet jet;
  jet.u = ad::reshape(out_xx.mean.v.v.value(), {ni});
  jet.u_x = ad::reshape(out_xx.mean.v.t.value(), {ni});
  jet.u_xx = ad::reshape(out_xx.mean.t.t.value(), {ni});
  jet.u_t = ad::reshape(out_tt.mean.v.t.value(), {ni});
  jet.u_tt = ad::reshape(out_tt.mean.t.t.value(), {ni});
  Tensor lv = ad::reshape(out_xx.logvar.value(), {ni});
  jet.stdev = Tensor::zeros({ni});
  for (std::size_t i = 0; i < ni; ++i) jet.stdev[i] = std::exp(0.5 * lv[i]);
  return jet;
}

}  // namespace wrvi
