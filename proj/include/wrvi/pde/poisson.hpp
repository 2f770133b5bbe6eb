#pragma once

#include "wrvi/ad/tape.hpp"
#include "wrvi/pde/problem.hpp"

namespace wrvi {

// Constant matrices for the 1D Galerkin assembly with linear hat
// elements: gradient and load contractions against quadrature values plus
// the basis evaluations of the kappa / forcing / solution expansions.
// Built once per problem; every entry is independent of (u, z, f).
struct PoissonWorkspace {
  ad::Tensor grad_map;    // [Q, n_nodes]  nodal values -> du/dx at quadrature points
  ad::Tensor grad_test;   // [n_nodes, Q]  weighted d(phi_i)/dx, boundary rows zero
  ad::Tensor load_test;   // [n_nodes, Q]  weighted phi_i, boundary rows zero
  ad::Tensor v_kappa;     // [Q, kappa_order+1]
  ad::Tensor v_forcing;   // [Q, forcing_order+1]
  ad::Tensor v_solution;  // [n_nodes, solution_order+1]
  std::vector<double> quad_points;
};

PoissonWorkspace make_poisson_workspace(const ProblemSpec& spec, std::size_t n_quad = 3);

// Dirichlet end values: taken from the z blocks "omega_l" / "omega_r"
// when declared, otherwise from the mesh defaults.
std::pair<double, double> dirichlet_values(const ProblemSpec& spec, const ad::Tensor& z);

// Galerkin residual, differentiable in (u_nodal, z, f). Interior rows are
// the weak-form integrals; the two boundary rows read u - omega.
ad::Var assemble_poisson_residual(const ProblemSpec& spec, const PoissonWorkspace& ws,
                                  ad::Var u_nodal, ad::Var z, ad::Var f);
ad::Tensor assemble_poisson_residual_value(const ProblemSpec& spec, const PoissonWorkspace& ws,
                                           const ad::Tensor& u_nodal, const ad::Tensor& z,
                                           const ad::Tensor& f);

// Jacobian d r / d u_nodal via one reverse sweep per residual row.
ad::Tensor poisson_jacobian(const ProblemSpec& spec, const PoissonWorkspace& ws,
                            const ad::Tensor& u_nodal, const ad::Tensor& z, const ad::Tensor& f);

// Damped Newton iteration on the assembled residual. Validation oracle
// only: the training loop never calls it.
struct NewtonResult {
  ad::Tensor u;
  double residual_norm = 0.0;
  int iterations = 0;
};

NewtonResult newton_solve(const ProblemSpec& spec, const PoissonWorkspace& ws, const ad::Tensor& z,
                          const ad::Tensor& f, const ad::Tensor& init, double tol, int max_iter);

// Fixed linear reparameterization of the residual through the inverse of
// the tangent stiffness assembled at the prior mean of z and u = 0.
struct Preconditioner {
  ad::Tensor inverse;  // [n_nodes, n_nodes]
};

Preconditioner make_preconditioner(const ProblemSpec& spec, const PoissonWorkspace& ws);
ad::Var precondition_residual(const Preconditioner& p, ad::Var r);
ad::Tensor precondition_residual_value(const Preconditioner& p, const ad::Tensor& r);

// kappa field at arbitrary points from the z vector (transform applied).
ad::Tensor kappa_field_value(const ProblemSpec& spec, const ad::Tensor& z,
                             const std::vector<double>& points);

}  // namespace wrvi
