#pragma once

#include <cstdint>
#include <vector>

#include "wrvi/ad/tensor.hpp"

namespace wrvi {

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First/second moment buffers mirroring the trainable parameter list,
// plus the count of applied updates (drives bias correction; skipped
// steps do not advance it).
struct AdamState {
  std::vector<ad::Tensor> m;
  std::vector<ad::Tensor> v;
  std::uint64_t updates = 0;

  static AdamState like(const std::vector<ad::Tensor*>& params);
};

// Global-norm gradient clip followed by one bias-corrected descent step.
// clip_norm <= 0 disables clipping.
void adam_step(const std::vector<ad::Tensor*>& params, AdamState& state,
               std::vector<ad::Tensor> grads, double lr, const AdamHyper& hyper,
               double clip_norm);

double global_norm(const std::vector<ad::Tensor>& grads);

}  // namespace wrvi
