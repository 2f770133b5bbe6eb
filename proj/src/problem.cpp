#include "wrvi/pde/problem.hpp"

#include <cmath>

namespace wrvi {

using ad::Tensor;

PdeKind pde_kind_from_string(const std::string& s) {
  if (s == "nonlinear_poisson") return PdeKind::nonlinear_poisson;
  if (s == "linear_poisson") return PdeKind::linear_poisson;
  if (s == "heat_collocation") return PdeKind::heat_collocation;
  if (s == "wave_collocation") return PdeKind::wave_collocation;
  throw ConfigError("unknown problem kind '" + s + "'");
}

std::string pde_kind_to_string(PdeKind k) {
  switch (k) {
    case PdeKind::nonlinear_poisson: return "nonlinear_poisson";
    case PdeKind::linear_poisson: return "linear_poisson";
    case PdeKind::heat_collocation: return "heat_collocation";
    case PdeKind::wave_collocation: return "wave_collocation";
  }
  return "nonlinear_poisson";
}

void ResidualCovariance::validate() const {
  if (uniform) {
    if (!(eps_u > 0.0)) throw ConfigError("residual covariance: eps_u must be > 0");
  } else if (!(eps_domain > 0.0) || !(eps_boundary > 0.0) || !(eps_initial > 0.0)) {
    throw ConfigError("residual covariance: all block stdevs must be > 0");
  }
}

Tensor ResidualCovariance::inverse_variance(std::size_t n_domain, std::size_t n_boundary,
                                            std::size_t n_initial) const {
  validate();
  const std::size_t n = n_domain + n_boundary + n_initial;
  Tensor w = Tensor::zeros({n});
  if (uniform) {
    const double iv = 1.0 / (eps_u * eps_u);
    for (std::size_t i = 0; i < n; ++i) w[i] = iv;
    return w;
  }
  std::size_t k = 0;
  for (std::size_t i = 0; i < n_domain; ++i) w[k++] = 1.0 / (eps_domain * eps_domain);
  for (std::size_t i = 0; i < n_boundary; ++i) w[k++] = 1.0 / (eps_boundary * eps_boundary);
  for (std::size_t i = 0; i < n_initial; ++i) w[k++] = 1.0 / (eps_initial * eps_initial);
  return w;
}

double ResidualCovariance::log_det(std::size_t n_domain, std::size_t n_boundary,
                                   std::size_t n_initial) const {
  validate();
  if (uniform) {
    const auto n = static_cast<double>(n_domain + n_boundary + n_initial);
    return n * 2.0 * std::log(eps_u);
  }
  return static_cast<double>(n_domain) * 2.0 * std::log(eps_domain) +
         static_cast<double>(n_boundary) * 2.0 * std::log(eps_boundary) +
         static_cast<double>(n_initial) * 2.0 * std::log(eps_initial);
}

CollocationGrid CollocationGrid::build(std::size_t nx, std::size_t nt,
                                       std::size_t n_boundary_per_side, std::size_t n_initial,
                                       double x_max, double t_final) {
  if (nx == 0 || nt == 0 || n_boundary_per_side == 0 || n_initial == 0) {
    throw ConfigError("collocation grid: all point counts must be >= 1");
  }
  CollocationGrid g;
  g.nx = nx;
  g.nt = nt;
  // Interior lattice: x strictly inside (0, x_max), t in (0, t_final].
  for (std::size_t j = 1; j <= nt; ++j) {
    const double t = t_final * static_cast<double>(j) / static_cast<double>(nt);
    for (std::size_t i = 1; i <= nx; ++i) {
      g.xi.push_back(x_max * static_cast<double>(i) / static_cast<double>(nx + 1));
      g.ti.push_back(t);
    }
  }
  for (std::size_t j = 1; j <= n_boundary_per_side; ++j) {
    const double t = t_final * static_cast<double>(j) / static_cast<double>(n_boundary_per_side);
    g.xb.push_back(0.0);
    g.tb.push_back(t);
    g.xb.push_back(x_max);
    g.tb.push_back(t);
  }
  for (std::size_t i = 1; i <= n_initial; ++i) {
    g.xc.push_back(x_max * static_cast<double>(i) / static_cast<double>(n_initial + 1));
    g.tc.push_back(0.0);
  }
  g.validate();
  return g;
}

void CollocationGrid::validate() const {
  if (xi.size() != ti.size() || xb.size() != tb.size() || xc.size() != tc.size()) {
    throw ConfigError("collocation grid: coordinate lists out of sync");
  }
  if (xi.empty() || xb.empty() || xc.empty()) {
    throw ConfigError("collocation grid: interior, boundary and initial sets must be nonempty");
  }
}

std::size_t ProblemSpec::solution_dim() const {
  if (is_poisson()) return solution_order + 1;
  return grid.n_interior() + grid.n_boundary() + grid.n_initial();
}

std::size_t ProblemSpec::residual_dim() const {
  if (is_poisson()) return mesh.n_nodes();
  const std::size_t init_rows =
      kind == PdeKind::wave_collocation ? 2 * grid.n_initial() : grid.n_initial();
  return grid.n_interior() + grid.n_boundary() + init_rows;
}

std::size_t ProblemSpec::inverse_input_dim() const {
  if (is_poisson()) return solution_order + 1;
  return grid.nx * grid.nt;
}

void ProblemSpec::validate() const {
  residual_cov.validate();
  for (const auto& b : z_prior.blocks) b.validate();
  for (const auto& b : f_prior.blocks) b.validate();
  if (is_poisson()) {
    mesh.validate();
    if (!z_prior.has_block("kappa")) {
      throw ConfigError("poisson problems require a 'kappa' block in the z prior");
    }
    const auto [off, size] = z_prior.block_range("kappa");
    (void)off;
    if (size != kappa_order + 1) {
      throw ConfigError("'kappa' block size must equal kappa_order+1");
    }
    if (f_prior.dim() != forcing_order + 1) {
      throw ConfigError("f prior dimension must equal forcing_order+1");
    }
  } else {
    grid.validate();
    if (kind == PdeKind::heat_collocation) {
      if (!z_prior.has_block("kappa") || !z_prior.has_block("gamma")) {
        throw ConfigError("heat problems require 'kappa' and 'gamma' z blocks");
      }
    } else {
      if (!z_prior.has_block("forcing_a")) {
        throw ConfigError("wave problems require a 'forcing_a' z block");
      }
      const auto [off, size] = z_prior.block_range("forcing_a");
      (void)off;
      if (size != wave_forcing_terms) {
        throw ConfigError("'forcing_a' block size must equal wave_forcing_terms");
      }
    }
  }
}

}  // namespace wrvi
