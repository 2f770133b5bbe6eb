#pragma once

#include "wrvi/ad/tensor.hpp"

namespace wrvi {

// Mean normalized squared error over batch rows:
// (1/N) sum_i ||truth_i - approx_i||^2 / ||truth_i||^2.
// Rank-1 inputs are treated as a single row. A zero-norm truth row is
// rejected with its index.
double mnse(const ad::Tensor& truth_batch, const ad::Tensor& approx_batch);

// Fraction of coordinates with |truth - mean| <= 2 stdev.
double coverage_2sigma(const ad::Tensor& truth, const ad::Tensor& means,
                       const ad::Tensor& stdevs);

}  // namespace wrvi
