#pragma once

#include <functional>
#include <string>
#include <vector>

#include "wrvi/ad/mlp.hpp"
#include "wrvi/prob/gaussian.hpp"

namespace wrvi {

// Gaussian network head: a shared trunk feeding separate affine mean and
// raw-logvar layers. The raw logvar is squashed into (lv_min, lv_max).
struct HeadParams {
  ad::MlpParams trunk;       // final trunk layer has identity applied here
  ad::Tensor mean_w, mean_b;
  ad::Tensor logvar_w, logvar_b;
  double lv_min = kDefaultLogvarMin;
  double lv_max = kDefaultLogvarMax;

  std::size_t input_dim() const { return trunk.input_dim(); }
  std::size_t output_dim() const { return mean_b.size(); }
  void validate() const;
};

// hidden = {h1, h2, ...}; trunk ends at the last hidden width, activation
// applied after every trunk layer including the last.
HeadParams make_head(std::size_t in_dim, const std::vector<std::size_t>& hidden,
                     std::size_t out_dim, ad::Activation act, RandomStream& rng,
                     double lv_min = kDefaultLogvarMin, double lv_max = kDefaultLogvarMax);
HeadParams make_zero_head(std::size_t in_dim, const std::vector<std::size_t>& hidden,
                          std::size_t out_dim, ad::Activation act,
                          double lv_min = kDefaultLogvarMin, double lv_max = kDefaultLogvarMax);

void for_each_param(HeadParams& h, const std::string& prefix,
                    const std::function<void(const std::string&, ad::Tensor&)>& fn);

struct HeadVars {
  ad::MlpVars trunk;
  ad::Var mean_w, mean_b, logvar_w, logvar_b;
  double lv_min = kDefaultLogvarMin;
  double lv_max = kDefaultLogvarMax;
};

HeadVars lift(ad::Tape& tape, const HeadParams& h);

// Taped application on a [batch, in] input (or dual thereof). The mean
// carries tangents; the logvar path reads the primal value only.
template <class T>
struct HeadOut {
  T mean;          // [batch, out]
  ad::Var logvar;  // [batch, out]
};

template <class T>
HeadOut<T> head_apply(const HeadVars& h, T x) {
  T z = x;
  for (std::size_t k = 0; k < h.trunk.weights.size(); ++k) {
    z = ad::activate(h.trunk.activation, ad::affine(z, h.trunk.weights[k], h.trunk.biases[k]));
  }
  T m = ad::affine(z, h.mean_w, h.mean_b);
  ad::Var raw = ad::affine(ad::primal(z), h.logvar_w, h.logvar_b);
  return {m, bounded_logvar(raw, h.lv_min, h.lv_max)};
}

// Pure evaluation: input [in] -> flat DiagGaussian over [out].
DiagGaussian head_apply_value(const HeadParams& h, const ad::Tensor& input);
// Batched pure evaluation: [batch, in] -> mean/logvar matrices.
std::pair<ad::Tensor, ad::Tensor> head_apply_value_batch(const HeadParams& h,
                                                         const ad::Tensor& input);

}  // namespace wrvi
