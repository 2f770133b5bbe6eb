#pragma once

#include <functional>
#include <string>
#include <vector>

#include "wrvi/ad/dual.hpp"
#include "wrvi/ad/tape.hpp"
#include "wrvi/util/rng.hpp"

namespace wrvi::ad {

enum class Activation { swish, tanh, identity };

Activation activation_from_string(const std::string& s);
std::string activation_to_string(Activation a);

// Fully connected network: alternating affine map and activation, final
// layer affine only (heads apply their own output transforms).
struct MlpParams {
  std::vector<Tensor> weights;  // layer k: [fan_in_k, fan_out_k]
  std::vector<Tensor> biases;   // layer k: [fan_out_k]
  Activation activation = Activation::swish;

  std::size_t input_dim() const { return weights.front().shape()[0]; }
  std::size_t output_dim() const { return weights.back().shape()[1]; }
  void validate() const;  // consecutive layer dimensions must chain
};

// sizes = {in, hidden..., out}; weights ~ N(0, 1/fan_in), zero biases.
MlpParams make_mlp(const std::vector<std::size_t>& sizes, Activation act, RandomStream& rng);
MlpParams make_zero_mlp(const std::vector<std::size_t>& sizes, Activation act);

void for_each_param(MlpParams& m, const std::string& prefix,
                    const std::function<void(const std::string&, Tensor&)>& fn);

struct MlpVars {
  std::vector<Var> weights;
  std::vector<Var> biases;
  Activation activation = Activation::swish;
};

MlpVars lift(Tape& tape, const MlpParams& params);

inline Var linmap(Var x, Var w) { return matmul(x, w); }
template <class U>
DualT<U> linmap(const DualT<U>& x, Var w) {
  return {linmap(x.v, w), linmap(x.t, w)};
}

inline Var affine(Var x, Var w, Var b) { return bcast_add(matmul(x, w), b); }
template <class U>
DualT<U> affine(const DualT<U>& x, Var w, Var b) {
  return {affine(x.v, w, b), linmap(x.t, w)};
}

template <class T>
T activate(Activation a, const T& x) {
  switch (a) {
    case Activation::swish: return swish(x);
    case Activation::tanh: return tanh(x);
    case Activation::identity: return x;
  }
  return x;
}

// Input [batch, fan_in] (tangents ride along when T is a dual type).
template <class T>
T mlp_apply(const MlpVars& m, T x) {
  for (std::size_t k = 0; k + 1 < m.weights.size(); ++k) {
    x = activate(m.activation, affine(x, m.weights[k], m.biases[k]));
  }
  return affine(x, m.weights.back(), m.biases.back());
}

// Pure evaluation without a tape; accepts [batch, fan_in] or [fan_in].
Tensor mlp_apply_value(const MlpParams& m, const Tensor& input);

}  // namespace wrvi::ad
