#include "wrvi/train/observed.hpp"

#include <cmath>

namespace wrvi {

using ad::Tape;
using ad::Tensor;
using ad::Var;

std::size_t ObservationModel::out_dim(std::size_t mesh_dim) const {
  return kept_indices(mesh_dim).size();
}

std::vector<std::size_t> ObservationModel::kept_indices(std::size_t mesh_dim) const {
  validate();
  std::vector<std::size_t> keep;
  if (op == ObservationOperator::identity) {
    for (std::size_t i = 0; i < mesh_dim; ++i) keep.push_back(i);
    return keep;
  }
  if (truncation_width >= mesh_dim) {
    throw ConfigError("observation operator: truncation width " +
                      std::to_string(truncation_width) + " >= field size " +
                      std::to_string(mesh_dim));
  }
  const std::size_t lo = (mesh_dim - truncation_width) / 2;
  for (std::size_t i = 0; i < lo; ++i) keep.push_back(i);
  for (std::size_t i = lo + truncation_width; i < mesh_dim; ++i) keep.push_back(i);
  return keep;
}

Tensor ObservationModel::apply(const Tensor& mesh_values) const {
  auto keep = kept_indices(mesh_values.size());
  Tensor out = Tensor::zeros({keep.size()});
  for (std::size_t i = 0; i < keep.size(); ++i) out[i] = mesh_values[keep[i]];
  return out;
}

void ObservationModel::validate() const {
  if (!(sigma_y > 0.0)) throw ConfigError("observation model: sigma_y must be > 0");
}

Var build_observed_elbo(Tape& tape, const ProblemHandles& handles, const HeadVars& phi,
                        const Tensor& y, const ObservationModel& model, RandomStream& rng) {
  const ProblemSpec& spec = *handles.spec;
  if (!spec.is_poisson()) {
    throw ConfigError("observed objective: only Galerkin problems carry an observation map");
  }
  const std::size_t du = spec.solution_dim();
  const std::size_t nn = spec.mesh.n_nodes();
  auto keep = model.kept_indices(nn);
  if (y.size() != keep.size()) {
    throw ShapeError("observed objective: y has " + std::to_string(y.size()) +
                     " entries, operator yields " + std::to_string(keep.size()));
  }

  Var yc = tape.constant(y);
  auto pout = head_apply(phi, reshape(yc, {1, y.size()}));
  Var mu = reshape(pout.mean, {du});
  Var lv = reshape(pout.logvar, {du});
  Var u = sample_reparam(mu, lv, tape.constant(standard_normal(du, rng)));

  // Project coefficients to the mesh, observe, and score against y.
  Var mesh = reshape(matmul(tape.constant(handles.poisson->v_solution), reshape(u, {du, 1})),
                     {nn});
  Tensor selector = Tensor::zeros({keep.size(), nn});
  for (std::size_t i = 0; i < keep.size(); ++i) selector.at(i, keep[i]) = 1.0;
  Var g_u = reshape(matmul(tape.constant(selector), reshape(mesh, {nn, 1})), {keep.size()});

  const double inv_var = 1.0 / (model.sigma_y * model.sigma_y);
  const auto dy = static_cast<double>(keep.size());
  Var d = yc - g_u;
  Var log_like = -0.5 * (sum(square(d)) * inv_var) -
                 0.5 * dy * (2.0 * std::log(model.sigma_y) + kLn2Pi);
  Var log_q = gaussian_log_density(u, mu, lv);
  return log_like - log_q;
}

DiagGaussian phi_encode(const HeadParams& phi, const Tensor& y) {
  return head_apply_value(phi, y);
}

MixturePosterior marginal_posterior_z(const HeadParams& phi, const HeadParams& beta,
                                      const ProblemSpec& spec, const Tensor& y, const Tensor& f,
                                      int n_samples, RandomStream& rng) {
  if (n_samples < 1) throw ConfigError("marginal_posterior_z: n_samples must be >= 1");
  DiagGaussian enc = phi_encode(phi, y);
  MixturePosterior post;
  post.components.reserve(static_cast<std::size_t>(n_samples));
  const std::size_t dz = spec.z_dim();
  Tensor mean_acc = Tensor::zeros({dz});
  Tensor second_acc = Tensor::zeros({dz});
  for (int j = 0; j < n_samples; ++j) {
    Tensor u = sample_reparam(enc, standard_normal(enc.dim(), rng));
    DiagGaussian comp = beta_apply_poisson(beta, spec, u, f);
    for (std::size_t i = 0; i < dz; ++i) {
      mean_acc[i] += comp.mean[i];
      second_acc[i] += std::exp(comp.logvar[i]) + comp.mean[i] * comp.mean[i];
    }
    post.components.push_back(std::move(comp));
  }
  const double inv_n = 1.0 / static_cast<double>(n_samples);
  post.mean = Tensor::zeros({dz});
  post.var_diag = Tensor::zeros({dz});
  for (std::size_t i = 0; i < dz; ++i) {
    post.mean[i] = mean_acc[i] * inv_n;
    post.var_diag[i] = second_acc[i] * inv_n - post.mean[i] * post.mean[i];
    if (post.var_diag[i] < 0.0) post.var_diag[i] = 0.0;  // guard tiny negative roundoff
  }
  return post;
}

}  // namespace wrvi
