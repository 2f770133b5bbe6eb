#pragma once

#include <functional>

#include "wrvi/ad/tensor.hpp"

namespace wrvi {

// Moments of transform(x) for x ~ N(mean, diag(diag_cov)) with a pointwise
// transform, via the classical 2d+1 sigma-point scheme with scaling
// kappa = 3 - d. Exact for affine transforms.
struct UnscentedMoments {
  ad::Tensor mean;
  ad::Tensor cov_diag;
};

UnscentedMoments unscented_moments(const ad::Tensor& mean, const ad::Tensor& diag_cov,
                                   const std::function<double(double)>& pointwise_transform);

}  // namespace wrvi
