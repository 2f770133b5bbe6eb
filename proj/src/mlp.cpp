#include "wrvi/ad/mlp.hpp"

#include <cmath>

namespace wrvi::ad {

Activation activation_from_string(const std::string& s) {
  if (s == "swish") return Activation::swish;
  if (s == "tanh") return Activation::tanh;
  if (s == "identity") return Activation::identity;
  throw ConfigError("unknown activation '" + s + "' (expected swish, tanh, or identity)");
}

std::string activation_to_string(Activation a) {
  switch (a) {
    case Activation::swish: return "swish";
    case Activation::tanh: return "tanh";
    case Activation::identity: return "identity";
  }
  return "swish";
}

void MlpParams::validate() const {
  if (weights.empty() || weights.size() != biases.size()) {
    throw ShapeError("MlpParams: layer lists are empty or unequal");
  }
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (weights[k].rank() != 2 || biases[k].rank() != 1 ||
        weights[k].shape()[1] != biases[k].size()) {
      throw ShapeError("MlpParams: layer " + std::to_string(k) + " weight " +
                       shape_string(weights[k].shape()) + " and bias " +
                       shape_string(biases[k].shape()) + " do not match");
    }
    if (k > 0 && weights[k - 1].shape()[1] != weights[k].shape()[0]) {
      throw ShapeError("MlpParams: dimension chain broken between layers " +
                       std::to_string(k - 1) + " and " + std::to_string(k));
    }
  }
}

MlpParams make_mlp(const std::vector<std::size_t>& sizes, Activation act, RandomStream& rng) {
  if (sizes.size() < 2) throw ShapeError("make_mlp: need at least input and output sizes");
  MlpParams m;
  m.activation = act;
  for (std::size_t k = 0; k + 1 < sizes.size(); ++k) {
    Tensor w = Tensor::zeros({sizes[k], sizes[k + 1]});
    const double scale = 1.0 / std::sqrt(static_cast<double>(sizes[k]));
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = scale * rng.normal();
    m.weights.push_back(std::move(w));
    m.biases.push_back(Tensor::zeros({sizes[k + 1]}));
  }
  m.validate();
  return m;
}

MlpParams make_zero_mlp(const std::vector<std::size_t>& sizes, Activation act) {
  MlpParams m;
  m.activation = act;
  for (std::size_t k = 0; k + 1 < sizes.size(); ++k) {
    m.weights.push_back(Tensor::zeros({sizes[k], sizes[k + 1]}));
    m.biases.push_back(Tensor::zeros({sizes[k + 1]}));
  }
  m.validate();
  return m;
}

void for_each_param(MlpParams& m, const std::string& prefix,
                    const std::function<void(const std::string&, Tensor&)>& fn) {
  for (std::size_t k = 0; k < m.weights.size(); ++k) {
    fn(prefix + ".w" + std::to_string(k), m.weights[k]);
    fn(prefix + ".b" + std::to_string(k), m.biases[k]);
  }
}

MlpVars lift(Tape& tape, const MlpParams& params) {
  params.validate();
  MlpVars v;
  v.activation = params.activation;
  for (std::size_t k = 0; k < params.weights.size(); ++k) {
    v.weights.push_back(tape.leaf(params.weights[k]));
    v.biases.push_back(tape.leaf(params.biases[k]));
  }
  return v;
}

Tensor mlp_apply_value(const MlpParams& m, const Tensor& input) {
  m.validate();
  Tensor x = input.rank() == 1 ? reshape(input, {1, input.size()}) : input;
  if (x.cols() != m.input_dim()) {
    throw ShapeError("mlp_apply: input width " + std::to_string(x.cols()) +
                     " does not match first layer fan_in " + std::to_string(m.input_dim()));
  }
  for (std::size_t k = 0; k + 1 < m.weights.size(); ++k) {
    x = bcast_add(matmul(x, m.weights[k]), m.biases[k]);
    switch (m.activation) {
      case Activation::swish: x = swish(x); break;
      case Activation::tanh: x = tanh(x); break;
      case Activation::identity: break;
    }
  }
  x = bcast_add(matmul(x, m.weights.back()), m.biases.back());
  if (input.rank() == 1) return reshape(x, {x.size()});
  return x;
}

}  // namespace wrvi::ad
