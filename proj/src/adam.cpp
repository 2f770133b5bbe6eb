#include "wrvi/train/adam.hpp"

#include <cmath>

#include "wrvi/common.hpp"

namespace wrvi {

using ad::Tensor;

AdamState AdamState::like(const std::vector<Tensor*>& params) {
  AdamState s;
  for (const Tensor* p : params) {
    s.m.push_back(Tensor::zeros(p->shape()));
    s.v.push_back(Tensor::zeros(p->shape()));
  }
  return s;
}

double global_norm(const std::vector<Tensor>& grads) {
  double acc = 0.0;
  for (const auto& g : grads) {
    for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * g[i];
  }
  return std::sqrt(acc);
}

void adam_step(const std::vector<Tensor*>& params, AdamState& state, std::vector<Tensor> grads,
               double lr, const AdamHyper& hyper, double clip_norm) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw ShapeError("adam_step: parameter, gradient and moment counts differ");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (!params[k]->same_shape(grads[k])) {
      throw ShapeError("adam_step: gradient " + std::to_string(k) + " shape " +
                       ad::shape_string(grads[k].shape()) + " does not match parameter " +
                       ad::shape_string(params[k]->shape()));
    }
  }

  if (clip_norm > 0.0) {
    const double n = global_norm(grads);
    if (n > clip_norm) {
      const double scale = clip_norm / n;
      for (auto& g : grads) {
        for (std::size_t i = 0; i < g.size(); ++i) g[i] *= scale;
      }
    }
  }

  state.updates += 1;
  const auto t = static_cast<double>(state.updates);
  const double bc1 = 1.0 - std::pow(hyper.beta1, t);
  const double bc2 = 1.0 - std::pow(hyper.beta2, t);

  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = *params[k];
    Tensor& m = state.m[k];
    Tensor& v = state.v[k];
    const Tensor& g = grads[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = hyper.beta1 * m[i] + (1.0 - hyper.beta1) * g[i];
      v[i] = hyper.beta2 * v[i] + (1.0 - hyper.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p[i] -= lr * mhat / (std::sqrt(vhat) + hyper.eps);
    }
  }
}

}  // namespace wrvi
