#include "wrvi/basis/unscented.hpp"

#include <cmath>

#include "wrvi/common.hpp"

namespace wrvi {

using ad::Tensor;

UnscentedMoments unscented_moments(const Tensor& mean, const Tensor& diag_cov,
                                   const std::function<double(double)>& pointwise_transform) {
  ad::require_same_shape(mean, diag_cov, "unscented_moments");
  const std::size_t d = mean.size();
  for (std::size_t i = 0; i < d; ++i) {
    if (diag_cov[i] < 0.0) {
      throw NumericError("unscented_moments: negative variance at coordinate " +
                         std::to_string(i));
    }
  }
  // 2d+1 sigma points with kappa = 3 - d, so d + kappa = 3: the center
  // carries weight (3-d)/3 and each of the 2d shifted points 1/6. With a
  // diagonal covariance and a pointwise transform only three distinct
  // values appear per coordinate; their collapsed weights are 2/3 for the
  // center value and 1/6 for each +/- sqrt(3 var) shift, independent of d.
  const double w_center = 2.0 / 3.0;
  const double w_side = 1.0 / 6.0;
  Tensor out_mean = Tensor::zeros(mean.shape());
  Tensor out_var = Tensor::zeros(mean.shape());
  for (std::size_t i = 0; i < d; ++i) {
    const double shift = std::sqrt(3.0 * diag_cov[i]);
    const double yc = pointwise_transform(mean[i]);
    const double yp = pointwise_transform(mean[i] + shift);
    const double ym = pointwise_transform(mean[i] - shift);
    const double m = w_center * yc + w_side * (yp + ym);
    out_mean[i] = m;
    out_var[i] =
        w_center * (yc - m) * (yc - m) + w_side * ((yp - m) * (yp - m) + (ym - m) * (ym - m));
  }
  return {std::move(out_mean), std::move(out_var)};
}

}  // namespace wrvi
