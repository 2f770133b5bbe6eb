#pragma once

#include "wrvi/train/loop.hpp"

namespace wrvi {

// One-sample objective for a single observation row: reconstruction
// likelihood of y under the encoder's solution sample minus the encoder
// entropy term (flat solution prior dropped).
ad::Var build_observed_elbo(ad::Tape& tape, const ProblemHandles& handles, const HeadVars& phi,
                            const ad::Tensor& y, const ObservationModel& model,
                            RandomStream& rng);

// Monte Carlo mixture for the parameter posterior given an observation:
// solution samples from the trained encoder, scored through the frozen
// inverse head; moment-matched via the law of total variance.
struct MixturePosterior {
  ad::Tensor mean;
  ad::Tensor var_diag;
  std::vector<DiagGaussian> components;
};

MixturePosterior marginal_posterior_z(const HeadParams& phi, const HeadParams& beta,
                                      const ProblemSpec& spec, const ad::Tensor& y,
                                      const ad::Tensor& f, int n_samples, RandomStream& rng);

// Encoder output interpreted as solution coefficients.
DiagGaussian phi_encode(const HeadParams& phi, const ad::Tensor& y);

}  // namespace wrvi
