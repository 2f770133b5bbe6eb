#include "wrvi/pde/collocation.hpp"

#include <cmath>

namespace wrvi {

using ad::Tape;
using ad::Tensor;
using ad::Var;

double heat_domain_row(const FieldJet& j, double kappa, double gamma) {
  if (!(kappa > 0.0)) {
    throw NumericError("heat residual: kappa must be positive, got " + std::to_string(kappa));
  }
  const double eta = (j.u * kappa * kappa + 1.0) / kappa;
  const double eta_u = kappa;
  return -j.u_t + (eta_u * j.u_x * j.u_x + eta * j.u_xx) / gamma;
}

double wave_domain_row(const FieldJet& j, double x, const Tensor& forcing_coeffs) {
  double forcing = 0.0;
  double xp = 1.0;
  for (std::size_t p = 0; p < forcing_coeffs.size(); ++p) {
    forcing += forcing_coeffs[p] * xp;
    xp *= x;
  }
  return j.u_tt - j.u_xx - forcing;
}

double heat_boundary_value() { return 1.0; }
double heat_initial_value(double x) { return std::sin(x) + 1.0; }
double wave_boundary_value(double t) { return -std::sin(t); }
double wave_initial_value(double x) { return std::sin(x); }
double wave_initial_velocity(double x) { return -std::cos(x); }

namespace {

Tensor stack_residual(const ProblemSpec& spec, const FieldEvaluator& field,
                      const DomainRowFn& domain_row) {
  spec.grid.validate();
  const auto& g = spec.grid;
  const bool wave = spec.kind == PdeKind::wave_collocation;
  Tensor r = Tensor::zeros({spec.residual_dim()});
  std::size_t k = 0;
  for (std::size_t i = 0; i < g.n_interior(); ++i) {
    r[k++] = domain_row(field(g.xi[i], g.ti[i]), g.xi[i], g.ti[i]);
  }
  for (std::size_t i = 0; i < g.n_boundary(); ++i) {
    const double target =
        wave ? wave_boundary_value(g.tb[i]) : heat_boundary_value();
    r[k++] = field(g.xb[i], g.tb[i]).u - target;
  }
  for (std::size_t i = 0; i < g.n_initial(); ++i) {
    const double target = wave ? wave_initial_value(g.xc[i]) : heat_initial_value(g.xc[i]);
    r[k++] = field(g.xc[i], g.tc[i]).u - target;
  }
  if (wave) {
    for (std::size_t i = 0; i < g.n_initial(); ++i) {
      r[k++] = field(g.xc[i], g.tc[i]).u_t - wave_initial_velocity(g.xc[i]);
    }
  }
  return r;
}

}  // namespace

Tensor collocation_residual(const ProblemSpec& spec, const FieldEvaluator& field,
                            const Tensor& z) {
  if (spec.kind == PdeKind::heat_collocation) {
    const double kappa = z[spec.z_prior.block_range("kappa").first];
    const double gamma = z[spec.z_prior.block_range("gamma").first];
    return stack_residual(spec, field, [&](const FieldJet& j, double, double) {
      return heat_domain_row(j, kappa, gamma);
    });
  }
  if (spec.kind == PdeKind::wave_collocation) {
    const auto [a_off, a_size] = spec.z_prior.block_range("forcing_a");
    Tensor a = ad::slice(z, a_off, a_size);
    return stack_residual(spec, field, [&](const FieldJet& j, double x, double) {
      return wave_domain_row(j, x, a);
    });
  }
  throw ConfigError("collocation_residual: spec is not a collocation problem");
}

Tensor collocation_residual_custom(const ProblemSpec& spec, const FieldEvaluator& field,
                                   const DomainRowFn& domain_row) {
  return stack_residual(spec, field, domain_row);
}

Var collocation_residual_taped(const ProblemSpec& spec, Tape& tape, const CollocationVars& field,
                               Var z) {
  const auto& g = spec.grid;
  const bool wave = spec.kind == PdeKind::wave_collocation;

  Var domain = [&]() {
    if (wave) {
      const auto [a_off, a_size] = spec.z_prior.block_range("forcing_a");
      Var a = slice(z, a_off, a_size);
      Tensor powers = Tensor::zeros({g.n_interior(), a_size});
      for (std::size_t i = 0; i < g.n_interior(); ++i) {
        double xp = 1.0;
        for (std::size_t p = 0; p < a_size; ++p) {
          powers.at(i, p) = xp;
          xp *= g.xi[i];
        }
      }
      Var forcing = reshape(matmul(tape.constant(powers), reshape(a, {a_size, 1})),
                            {g.n_interior()});
      return field.utt_interior - field.uxx_interior - forcing;
    }
    Var kappa = slice(z, spec.z_prior.block_range("kappa").first, 1);
    Var gamma = slice(z, spec.z_prior.block_range("gamma").first, 1);
    if (!(kappa.value()[0] > 0.0)) {
      throw NumericError("heat residual: kappa must be positive, got " +
                         std::to_string(kappa.value()[0]));
    }
    // eta = (u kappa^2 + 1) / kappa, eta_u = kappa
    Var inv_kappa = tape.constant_scalar(1.0) / reshape(kappa, {});
    Var kappa_s = reshape(kappa, {});
    Var eta = scalar_mul(field.u_interior, scalar_mul(kappa_s, kappa_s)) + 1.0;
    eta = scalar_mul(eta, inv_kappa);
    Var flux = scalar_mul(square(field.ux_interior), kappa_s) + eta * field.uxx_interior;
    Var inv_gamma = tape.constant_scalar(1.0) / reshape(gamma, {});
    return -field.ut_interior + scalar_mul(flux, inv_gamma);
  }();

  std::vector<double> b_target(g.n_boundary());
  for (std::size_t i = 0; i < g.n_boundary(); ++i) {
    b_target[i] = wave ? wave_boundary_value(g.tb[i]) : heat_boundary_value();
  }
  Var boundary = field.u_boundary - tape.constant(Tensor::vector(std::move(b_target)));

  std::vector<double> c_target(g.n_initial());
  for (std::size_t i = 0; i < g.n_initial(); ++i) {
    c_target[i] = wave ? wave_initial_value(g.xc[i]) : heat_initial_value(g.xc[i]);
  }
  Var initial = field.u_initial - tape.constant(Tensor::vector(std::move(c_target)));

  std::vector<Var> blocks{domain, boundary, initial};
  if (wave) {
    std::vector<double> v_target(g.n_initial());
    for (std::size_t i = 0; i < g.n_initial(); ++i) v_target[i] = wave_initial_velocity(g.xc[i]);
    blocks.push_back(field.ut_initial - tape.constant(Tensor::vector(std::move(v_target))));
  }
  return concat(blocks);
}

}  // namespace wrvi
