#pragma once

#include <optional>

#include "wrvi/pde/collocation.hpp"
#include "wrvi/pde/poisson.hpp"
#include "wrvi/prob/heads.hpp"

namespace wrvi {

// Residual backend handles shared by training and evaluation.
struct ProblemHandles {
  const ProblemSpec* spec = nullptr;
  std::optional<PoissonWorkspace> poisson;
  std::optional<Preconditioner> precond;

  static ProblemHandles make(const ProblemSpec& spec);
};

struct ElboEstimate {
  ad::Var value;          // Monte Carlo average of the integrand
  ad::Var residual_term;  // average residual log-likelihood component
};

// Monte Carlo estimate of the solver-free objective: draw z and f from
// their priors, a solution sample from the forward head, and score the
// zero-residual pseudo-observation together with the inverse head's
// density, minus the forward entropy term. Gradients flow to both heads
// through the returned Var. Uniform-prior constants (and the z prior
// density) only shift the reported value; they are added when
// `include_prior_constants` is set.
ElboEstimate build_solver_free_elbo(ad::Tape& tape, const ProblemHandles& handles,
                                    const HeadVars& alpha, const HeadVars& beta,
                                    RandomStream& rng, int n_samples,
                                    bool include_prior_constants);

// ---- value-land network application with the problem's input layouts ----

// Forward map for Galerkin problems: (z, f) -> Gaussian over solution
// expansion coefficients.
DiagGaussian alpha_apply_poisson(const HeadParams& alpha, const ProblemSpec& spec,
                                 const ad::Tensor& z, const ad::Tensor& f);
// Inverse map for Galerkin problems: (solution coefficients, f) -> z.
DiagGaussian beta_apply_poisson(const HeadParams& beta, const ProblemSpec& spec,
                                const ad::Tensor& u_coeffs, const ad::Tensor& f);

// Coordinate matrix [n, 2] of a collocation block (columns x, t).
enum class GridBlock { interior, boundary, initial };
ad::Tensor collocation_coords(const CollocationGrid& grid, GridBlock block);

// Pointwise forward map over a coordinate batch: mean and logvar vectors.
std::pair<ad::Tensor, ad::Tensor> alpha_apply_points(const HeadParams& alpha,
                                                     const ad::Tensor& coords,
                                                     const ad::Tensor& z);
// Inverse map from a field picture (flattened interior lattice).
DiagGaussian beta_apply_field(const HeadParams& beta, const ad::Tensor& field_values);

// Mean field and its derivatives over the interior block for a fixed z,
// evaluated through forward tangents of the forward head (value land);
// used by residual scans and collocation evaluation.
struct MeanFieldJet {
  ad::Tensor u, u_t, u_x, u_xx, u_tt;  // interior block values
  ad::Tensor stdev;                    // predictive stdev at interior points
};
MeanFieldJet alpha_mean_field_jet(const HeadParams& alpha, const ProblemSpec& spec,
                                  const ad::Tensor& z);

}  // namespace wrvi
