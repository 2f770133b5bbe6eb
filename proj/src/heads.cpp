#include "wrvi/prob/heads.hpp"

#include <cmath>

namespace wrvi {

using ad::Tensor;

void HeadParams::validate() const {
  trunk.validate();
  const std::size_t tw = trunk.output_dim();
  if (mean_w.rank() != 2 || mean_w.shape()[0] != tw || mean_w.shape()[1] != mean_b.size()) {
    throw ShapeError("HeadParams: mean layer does not chain onto trunk");
  }
  if (logvar_w.rank() != 2 || logvar_w.shape()[0] != tw ||
      logvar_w.shape()[1] != logvar_b.size()) {
    throw ShapeError("HeadParams: logvar layer does not chain onto trunk");
  }
  if (mean_b.size() != logvar_b.size()) {
    throw ShapeError("HeadParams: mean and logvar output lengths differ");
  }
  if (!(lv_min < lv_max)) throw ShapeError("HeadParams: requires lv_min < lv_max");
}

HeadParams make_head(std::size_t in_dim, const std::vector<std::size_t>& hidden,
                     std::size_t out_dim, ad::Activation act, RandomStream& rng, double lv_min,
                     double lv_max) {
  if (hidden.empty()) throw ShapeError("make_head: need at least one hidden layer");
  std::vector<std::size_t> sizes;
  sizes.push_back(in_dim);
  for (auto h : hidden) sizes.push_back(h);
  HeadParams p;
  // Trunk built as consecutive affine layers; activation is applied by
  // head_apply after each one.
  p.trunk = ad::make_mlp(sizes, act, rng);
  const std::size_t tw = hidden.back();
  auto init = [&](std::size_t r, std::size_t c) {
    Tensor w = Tensor::zeros({r, c});
    const double scale = 1.0 / std::sqrt(static_cast<double>(r));
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = scale * rng.normal();
    return w;
  };
  p.mean_w = init(tw, out_dim);
  p.mean_b = Tensor::zeros({out_dim});
  p.logvar_w = init(tw, out_dim);
  p.logvar_b = Tensor::zeros({out_dim});
  p.lv_min = lv_min;
  p.lv_max = lv_max;
  p.validate();
  return p;
}

HeadParams make_zero_head(std::size_t in_dim, const std::vector<std::size_t>& hidden,
                          std::size_t out_dim, ad::Activation act, double lv_min, double lv_max) {
  if (hidden.empty()) throw ShapeError("make_zero_head: need at least one hidden layer");
  std::vector<std::size_t> sizes;
  sizes.push_back(in_dim);
  for (auto h : hidden) sizes.push_back(h);
  HeadParams p;
  p.trunk = ad::make_zero_mlp(sizes, act);
  const std::size_t tw = hidden.back();
  p.mean_w = Tensor::zeros({tw, out_dim});
  p.mean_b = Tensor::zeros({out_dim});
  p.logvar_w = Tensor::zeros({tw, out_dim});
  p.logvar_b = Tensor::zeros({out_dim});
  p.lv_min = lv_min;
  p.lv_max = lv_max;
  p.validate();
  return p;
}

void for_each_param(HeadParams& h, const std::string& prefix,
                    const std::function<void(const std::string&, Tensor&)>& fn) {
  for_each_param(h.trunk, prefix + ".trunk", fn);
  fn(prefix + ".mean_w", h.mean_w);
  fn(prefix + ".mean_b", h.mean_b);
  fn(prefix + ".logvar_w", h.logvar_w);
  fn(prefix + ".logvar_b", h.logvar_b);
}

HeadVars lift(ad::Tape& tape, const HeadParams& h) {
  h.validate();
  HeadVars v;
  v.trunk = ad::lift(tape, h.trunk);
  v.mean_w = tape.leaf(h.mean_w);
  v.mean_b = tape.leaf(h.mean_b);
  v.logvar_w = tape.leaf(h.logvar_w);
  v.logvar_b = tape.leaf(h.logvar_b);
  v.lv_min = h.lv_min;
  v.lv_max = h.lv_max;
  return v;
}

std::pair<Tensor, Tensor> head_apply_value_batch(const HeadParams& h, const Tensor& input) {
  h.validate();
  Tensor z = input.rank() == 1 ? ad::reshape(input, {1, input.size()}) : input;
  if (z.cols() != h.input_dim()) {
    throw ShapeError("head_apply: input width " + std::to_string(z.cols()) +
                     " does not match trunk fan_in " + std::to_string(h.input_dim()));
  }
  for (std::size_t k = 0; k < h.trunk.weights.size(); ++k) {
    z = ad::bcast_add(ad::matmul(z, h.trunk.weights[k]), h.trunk.biases[k]);
    switch (h.trunk.activation) {
      case ad::Activation::swish: z = ad::swish(z); break;
      case ad::Activation::tanh: z = ad::tanh(z); break;
      case ad::Activation::identity: break;
    }
  }
  Tensor m = ad::bcast_add(ad::matmul(z, h.mean_w), h.mean_b);
  Tensor raw = ad::bcast_add(ad::matmul(z, h.logvar_w), h.logvar_b);
  return {m, bounded_logvar(raw, h.lv_min, h.lv_max)};
}

DiagGaussian head_apply_value(const HeadParams& h, const Tensor& input) {
  auto [m, lv] = head_apply_value_batch(h, input);
  return {ad::reshape(m, {m.size()}), ad::reshape(lv, {lv.size()})};
}

}  // namespace wrvi
