#pragma once

#include <string>
#include <vector>

#include "wrvi/basis/chebyshev.hpp"
#include "wrvi/prob/priors.hpp"

namespace wrvi {

// 1D mesh with consecutive-node elements and Dirichlet end values.
struct Mesh1D {
  std::vector<double> nodes;  // strictly increasing, >= 3 entries
  double dirichlet_left = 0.0;
  double dirichlet_right = 0.0;

  std::size_t n_nodes() const { return nodes.size(); }
  std::size_t n_elements() const { return nodes.size() - 1; }
  Interval domain() const { return {nodes.front(), nodes.back()}; }

  static Mesh1D uniform(Interval domain, std::size_t elements, double omega_l = 0.0,
                        double omega_r = 0.0);
  void validate() const;
};

enum class PdeKind { nonlinear_poisson, linear_poisson, heat_collocation, wave_collocation };

PdeKind pde_kind_from_string(const std::string& s);
std::string pde_kind_to_string(PdeKind k);

// Residual noise model: either a single stdev for every row or one stdev
// per block (domain, boundary, initial rows of a collocation stack).
struct ResidualCovariance {
  bool uniform = true;
  double eps_u = 1e-2;
  double eps_domain = 1e-2;
  double eps_boundary = 1e-3;
  double eps_initial = 1e-3;

  void validate() const;
  // Stacked inverse variances for (n_domain, n_boundary, n_initial) rows;
  // uniform covariances ignore the block split.
  ad::Tensor inverse_variance(std::size_t n_domain, std::size_t n_boundary,
                              std::size_t n_initial) const;
  double log_det(std::size_t n_domain, std::size_t n_boundary, std::size_t n_initial) const;
};

// Interior / boundary / initial point sets for collocation problems on
// (0, x_max) x (0, t_final]. The interior points form an nx-by-nt lattice
// whose flattened field values feed the inverse network.
struct CollocationGrid {
  std::size_t nx = 0, nt = 0;
  std::vector<double> xi, ti;  // interior, row-major over (t, x)
  std::vector<double> xb, tb;  // both vertical sides
  std::vector<double> xc, tc;  // initial row (t = 0)

  std::size_t n_interior() const { return xi.size(); }
  std::size_t n_boundary() const { return xb.size(); }
  std::size_t n_initial() const { return xc.size(); }

  static CollocationGrid build(std::size_t nx, std::size_t nt, std::size_t n_boundary_per_side,
                               std::size_t n_initial, double x_max, double t_final);
  void validate() const;
};

// Everything defining one experiment's PDE side: the equation, the
// discretization, priors over parameters and forcing, and the residual
// covariance.
struct ProblemSpec {
  PdeKind kind = PdeKind::nonlinear_poisson;

  // Galerkin problems.
  Mesh1D mesh;
  std::size_t solution_order = 9;
  std::size_t kappa_order = 4;
  std::size_t forcing_order = 3;
  Transform kappa_transform = Transform::softplus;

  // Collocation problems.
  CollocationGrid grid;
  double x_max = 2.0 * 3.14159265358979323846;
  double t_final = 1.0;
  std::size_t wave_forcing_terms = 4;

  PriorSpec z_prior;
  PriorSpec f_prior;
  ResidualCovariance residual_cov;
  bool precondition = false;

  bool is_poisson() const {
    return kind == PdeKind::nonlinear_poisson || kind == PdeKind::linear_poisson;
  }
  bool is_collocation() const { return !is_poisson(); }

  std::size_t z_dim() const { return z_prior.dim(); }
  std::size_t f_dim() const { return f_prior.dim(); }

  // Latent solution representation fed to / produced by the networks:
  // Chebyshev coefficients for Galerkin problems, stacked field values for
  // collocation problems.
  std::size_t solution_dim() const;
  std::size_t residual_dim() const;
  // Width of the field picture consumed by the inverse network.
  std::size_t inverse_input_dim() const;

  void validate() const;
};

}  // namespace wrvi
