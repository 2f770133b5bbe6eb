#include "wrvi/prob/gaussian.hpp"

#include <cmath>

namespace wrvi {

using ad::Tensor;
using ad::Var;

Tensor DiagGaussian::stdev() const {
  Tensor s = Tensor::zeros(logvar.shape());
  for (std::size_t i = 0; i < logvar.size(); ++i) s[i] = std::exp(0.5 * logvar[i]);
  return s;
}

double gaussian_log_density(const Tensor& x, const DiagGaussian& g) {
  if (!x.same_shape(g.mean) || !x.same_shape(g.logvar)) {
    throw ShapeError("gaussian_log_density: x " + ad::shape_string(x.shape()) + " vs mean " +
                     ad::shape_string(g.mean.shape()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - g.mean[i];
    acc += d * d * std::exp(-g.logvar[i]) + g.logvar[i] + kLn2Pi;
  }
  return -0.5 * acc;
}

Var gaussian_log_density(Var x, Var mean, Var logvar) {
  ad::require_same_shape(x.value(), mean.value(), "gaussian_log_density");
  ad::require_same_shape(x.value(), logvar.value(), "gaussian_log_density");
  Var d = x - mean;
  Var quad = square(d) * exp(-logvar);
  return -0.5 * sum(quad + logvar + kLn2Pi);
}

Tensor sample_reparam(const DiagGaussian& g, const Tensor& noise) {
  ad::require_same_shape(g.mean, noise, "sample_reparam");
  Tensor out = Tensor::zeros(g.mean.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = g.mean[i] + std::exp(0.5 * g.logvar[i]) * noise[i];
  }
  return out;
}

Var sample_reparam(Var mean, Var logvar, Var noise) {
  ad::require_same_shape(mean.value(), noise.value(), "sample_reparam");
  return mean + exp(logvar * 0.5) * noise;
}

Tensor standard_normal(std::size_t n, RandomStream& rng) {
  Tensor out = Tensor::zeros({n});
  for (std::size_t i = 0; i < n; ++i) out[i] = rng.normal();
  return out;
}

double bounded_logvar(double raw, double lv_min, double lv_max) {
  const double s = raw >= 0.0 ? 1.0 / (1.0 + std::exp(-raw)) : std::exp(raw) / (1.0 + std::exp(raw));
  return lv_min + (lv_max - lv_min) * s;
}

Tensor bounded_logvar(const Tensor& raw, double lv_min, double lv_max) {
  Tensor out = Tensor::zeros(raw.shape());
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = bounded_logvar(raw[i], lv_min, lv_max);
  return out;
}

Var bounded_logvar(Var raw, double lv_min, double lv_max) {
  return lv_min + (lv_max - lv_min) * sigmoid(raw);
}

}  // namespace wrvi
