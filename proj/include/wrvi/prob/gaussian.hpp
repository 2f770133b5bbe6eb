#pragma once

#include "wrvi/ad/dual.hpp"
#include "wrvi/ad/tensor.hpp"
#include "wrvi/util/rng.hpp"

namespace wrvi {

inline constexpr double kLn2Pi = 1.8378770664093454836;

// Diagonal Gaussian in value space (no tape attached).
struct DiagGaussian {
  ad::Tensor mean;
  ad::Tensor logvar;

  ad::Tensor stdev() const;
  std::size_t dim() const { return mean.size(); }
};

// log N(x; mean, diag(exp(logvar)))
double gaussian_log_density(const ad::Tensor& x, const DiagGaussian& g);
ad::Var gaussian_log_density(ad::Var x, ad::Var mean, ad::Var logvar);

// mean + exp(logvar/2) .* noise
ad::Tensor sample_reparam(const DiagGaussian& g, const ad::Tensor& noise);
ad::Var sample_reparam(ad::Var mean, ad::Var logvar, ad::Var noise);

ad::Tensor standard_normal(std::size_t n, RandomStream& rng);

// logvar = lv_min + (lv_max - lv_min) * sigmoid(raw); keeps predicted
// variances smoothly inside fixed bounds.
inline constexpr double kDefaultLogvarMin = -13.8;
inline constexpr double kDefaultLogvarMax = 2.0;

double bounded_logvar(double raw, double lv_min = kDefaultLogvarMin,
                      double lv_max = kDefaultLogvarMax);
ad::Tensor bounded_logvar(const ad::Tensor& raw, double lv_min = kDefaultLogvarMin,
                          double lv_max = kDefaultLogvarMax);
ad::Var bounded_logvar(ad::Var raw, double lv_min = kDefaultLogvarMin,
                       double lv_max = kDefaultLogvarMax);

}  // namespace wrvi
