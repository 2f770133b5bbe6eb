#include "wrvi/pde/poisson.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace wrvi {

using ad::Tape;
using ad::Tensor;
using ad::Var;

namespace {

struct QuadratureRule {
  std::vector<double> points;   // on [-1, 1]
  std::vector<double> weights;
};

QuadratureRule gauss_legendre(std::size_t n) {
  switch (n) {
    case 1: return {{0.0}, {2.0}};
    case 2: {
      const double p = 1.0 / std::sqrt(3.0);
      return {{-p, p}, {1.0, 1.0}};
    }
    case 3: {
      const double p = std::sqrt(3.0 / 5.0);
      return {{-p, 0.0, p}, {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0}};
    }
    case 5:
      return {{-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
               0.9061798459386640},
              {0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665,
               0.2369268850561891}};
    default:
      throw ConfigError("gauss_legendre: unsupported point count " + std::to_string(n));
  }
}

Var apply_transform(Transform t, Var x) {
  switch (t) {
    case Transform::identity: return x;
    case Transform::softplus: return softplus(x);
    case Transform::softplus_plus_one: return softplus(x) + 1.0;
    case Transform::sigmoid: return sigmoid(x);
  }
  return x;
}

Var as_column(Var v) { return reshape(v, {v.value().size(), 1}); }
Var as_flat(Var v) { return reshape(v, {v.value().size()}); }

}  // namespace

PoissonWorkspace make_poisson_workspace(const ProblemSpec& spec, std::size_t n_quad) {
  spec.validate();
  const auto& nodes = spec.mesh.nodes;
  const std::size_t ne = spec.mesh.n_elements();
  const std::size_t nn = spec.mesh.n_nodes();
  const QuadratureRule rule = gauss_legendre(n_quad);
  const std::size_t q_total = ne * rule.points.size();

  PoissonWorkspace ws;
  ws.grad_map = Tensor::zeros({q_total, nn});
  ws.grad_test = Tensor::zeros({nn, q_total});
  ws.load_test = Tensor::zeros({nn, q_total});
  ws.quad_points.resize(q_total);

  std::size_t q = 0;
  for (std::size_t e = 0; e < ne; ++e) {
    const double xl = nodes[e];
    const double xr = nodes[e + 1];
    const double h = xr - xl;
    for (std::size_t k = 0; k < rule.points.size(); ++k, ++q) {
      const double xq = 0.5 * (xl + xr) + 0.5 * h * rule.points[k];
      const double wq = 0.5 * h * rule.weights[k];
      ws.quad_points[q] = xq;
      ws.grad_map.at(q, e) = -1.0 / h;
      ws.grad_map.at(q, e + 1) = 1.0 / h;
      // d(phi)/dx is constant per element; boundary test rows stay zero
      // because those residual rows are replaced by u - omega.
      if (e >= 1) ws.grad_test.at(e, q) = -wq / h;
      if (e + 1 <= nn - 2) ws.grad_test.at(e + 1, q) = wq / h;
      if (e >= 1) ws.load_test.at(e, q) = wq * (xr - xq) / h;
      if (e + 1 <= nn - 2) ws.load_test.at(e + 1, q) = wq * (xq - xl) / h;
    }
  }

  Interval dom = spec.mesh.domain();
  ws.v_kappa = chebyshev_vandermonde(spec.kappa_order, ws.quad_points, dom).matrix;
  ws.v_forcing = chebyshev_vandermonde(spec.forcing_order, ws.quad_points, dom).matrix;
  ws.v_solution = chebyshev_vandermonde(spec.solution_order, nodes, dom).matrix;
  return ws;
}

std::pair<double, double> dirichlet_values(const ProblemSpec& spec, const Tensor& z) {
  double wl = spec.mesh.dirichlet_left;
  double wr = spec.mesh.dirichlet_right;
  if (spec.z_prior.has_block("omega_l")) wl = z[spec.z_prior.block_range("omega_l").first];
  if (spec.z_prior.has_block("omega_r")) wr = z[spec.z_prior.block_range("omega_r").first];
  return {wl, wr};
}

Var assemble_poisson_residual(const ProblemSpec& spec, const PoissonWorkspace& ws, Var u_nodal,
                              Var z, Var f) {
  Tape& tape = *u_nodal.tape;
  const std::size_t nn = spec.mesh.n_nodes();
  if (u_nodal.value().size() != nn) {
    throw ShapeError("assemble_poisson_residual: u_nodal length " +
                     std::to_string(u_nodal.value().size()) + " != node count " +
                     std::to_string(nn));
  }

  Var grad_map = tape.constant(ws.grad_map);
  Var grad_test = tape.constant(ws.grad_test);
  Var load_test = tape.constant(ws.load_test);
  Var v_kappa = tape.constant(ws.v_kappa);
  Var v_forcing = tape.constant(ws.v_forcing);

  Var du = as_flat(matmul(grad_map, as_column(u_nodal)));

  const auto [k_off, k_size] = spec.z_prior.block_range("kappa");
  Var kappa_q = apply_transform(spec.kappa_transform,
                                as_flat(matmul(v_kappa, as_column(slice(z, k_off, k_size)))));

  Var eta = [&]() {
    if (spec.kind == PdeKind::linear_poisson) return kappa_q;
    // (sigmoid(|du/dx|) + 5 kappa) / 10
    return (sigmoid(abs(du)) + 5.0 * kappa_q) * 0.1;
  }();
  if (!eta.value().all_finite()) {
    throw NumericError("assemble_poisson_residual: non-finite diffusivity");
  }

  Var f_q = as_flat(matmul(v_forcing, as_column(f)));
  Var r_interior =
      as_flat(matmul(grad_test, as_column(eta * du))) - as_flat(matmul(load_test, as_column(f_q)));

  // Boundary rows read u - omega so the residual likelihood sees the
  // Dirichlet mismatch.
  Var wl = spec.z_prior.has_block("omega_l")
               ? slice(z, spec.z_prior.block_range("omega_l").first, 1)
               : tape.constant(Tensor::vector({spec.mesh.dirichlet_left}));
  Var wr = spec.z_prior.has_block("omega_r")
               ? slice(z, spec.z_prior.block_range("omega_r").first, 1)
               : tape.constant(Tensor::vector({spec.mesh.dirichlet_right}));
  Var bl = slice(u_nodal, 0, 1) - wl;
  Var br = slice(u_nodal, nn - 1, 1) - wr;
  Var boundary = ad::concat({bl, tape.constant(Tensor::zeros({nn - 2})), br});
  return r_interior + boundary;
}

Tensor assemble_poisson_residual_value(const ProblemSpec& spec, const PoissonWorkspace& ws,
                                       const Tensor& u_nodal, const Tensor& z, const Tensor& f) {
  Tape tape;
  Var r = assemble_poisson_residual(spec, ws, tape.leaf(u_nodal), tape.leaf(z), tape.leaf(f));
  return r.value();
}

Tensor poisson_jacobian(const ProblemSpec& spec, const PoissonWorkspace& ws, const Tensor& u_nodal,
                        const Tensor& z, const Tensor& f) {
  Tape tape;
  Var u = tape.leaf(u_nodal);
  Var r = assemble_poisson_residual(spec, ws, u, tape.constant(z), tape.constant(f));
  const std::size_t nn = u_nodal.size();
  Tensor jac = Tensor::zeros({nn, nn});
  for (std::size_t i = 0; i < nn; ++i) {
    Var ri = slice(r, i, 1);
    Tensor row = tape.gradients(ri, {u})[0];
    for (std::size_t j = 0; j < nn; ++j) jac.at(i, j) = row[j];
  }
  return jac;
}

NewtonResult newton_solve(const ProblemSpec& spec, const PoissonWorkspace& ws, const Tensor& z,
                          const Tensor& f, const Tensor& init, double tol, int max_iter) {
  if (!(tol > 0.0)) throw NumericError("newton_solve: tol must be > 0");
  const std::size_t nn = spec.mesh.n_nodes();
  Tensor u = init;
  double rnorm = ad::max_abs(assemble_poisson_residual_value(spec, ws, u, z, f));
  int it = 0;
  while (rnorm > tol && it < max_iter) {
    Tensor jac = poisson_jacobian(spec, ws, u, z, f);
    Tensor r = assemble_poisson_residual_value(spec, ws, u, z, f);
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> jm(
        jac.data(), static_cast<Eigen::Index>(nn), static_cast<Eigen::Index>(nn));
    Eigen::Map<const Eigen::VectorXd> rv(r.data(), static_cast<Eigen::Index>(nn));
    Eigen::FullPivLU<Eigen::MatrixXd> lu(jm);
    if (!lu.isInvertible()) {
      throw NumericError("newton_solve: singular Jacobian at iteration " + std::to_string(it));
    }
    Eigen::VectorXd step = lu.solve(-rv);

    // Step halving when the residual norm does not decrease.
    double scale = 1.0;
    Tensor u_next = u;
    double next_norm = rnorm;
    for (int halving = 0; halving <= 10; ++halving) {
      Tensor trial = u;
      for (std::size_t i = 0; i < nn; ++i) trial[i] += scale * step(static_cast<Eigen::Index>(i));
      const double trial_norm =
          ad::max_abs(assemble_poisson_residual_value(spec, ws, trial, z, f));
      u_next = std::move(trial);
      next_norm = trial_norm;
      if (trial_norm < rnorm) break;
      scale *= 0.5;
    }
    u = std::move(u_next);
    rnorm = next_norm;
    ++it;
  }
  if (rnorm > tol) {
    throw NumericError("newton_solve: no convergence in " + std::to_string(max_iter) +
                       " iterations, residual norm " + std::to_string(rnorm));
  }
  return {std::move(u), rnorm, it};
}

Preconditioner make_preconditioner(const ProblemSpec& spec, const PoissonWorkspace& ws) {
  const std::size_t nn = spec.mesh.n_nodes();
  Tensor z_bar = spec.z_prior.mean();
  Tensor u0 = Tensor::zeros({nn});
  Tensor f0 = Tensor::zeros({spec.f_dim()});
  Tensor jac = poisson_jacobian(spec, ws, u0, z_bar, f0);
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> jm(
      jac.data(), static_cast<Eigen::Index>(nn), static_cast<Eigen::Index>(nn));
  Eigen::FullPivLU<Eigen::MatrixXd> lu(jm);
  if (!lu.isInvertible()) {
    throw NumericError("preconditioner setup: tangent stiffness at the prior mean is singular"
                       " (rcond " +
                       std::to_string(lu.rcond()) + ")");
  }
  Eigen::MatrixXd inv = lu.inverse();
  Tensor out = Tensor::zeros({nn, nn});
  for (std::size_t i = 0; i < nn; ++i) {
    for (std::size_t j = 0; j < nn; ++j) {
      out.at(i, j) = inv(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }
  return {std::move(out)};
}

Var precondition_residual(const Preconditioner& p, Var r) {
  Tape& tape = *r.tape;
  Var m = tape.constant(p.inverse);
  return as_flat(matmul(m, as_column(r)));
}

Tensor precondition_residual_value(const Preconditioner& p, const Tensor& r) {
  return ad::reshape(ad::matmul(p.inverse, ad::reshape(r, {r.size(), 1})), {r.size()});
}

Tensor kappa_field_value(const ProblemSpec& spec, const Tensor& z,
                         const std::vector<double>& points) {
  const auto [k_off, k_size] = spec.z_prior.block_range("kappa");
  ChebyshevField field{ad::slice(z, k_off, k_size), spec.mesh.domain(), spec.kappa_transform};
  return project_to_fem(field, points);
}

}  // namespace wrvi
