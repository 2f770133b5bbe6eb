#include "wrvi/eval/metrics.hpp"

#include <cmath>

#include "wrvi/common.hpp"

namespace wrvi {

using ad::Tensor;

double mnse(const Tensor& truth_batch, const Tensor& approx_batch) {
  ad::require_same_shape(truth_batch, approx_batch, "mnse");
  const std::size_t rows = truth_batch.rank() == 2 ? truth_batch.rows() : 1;
  const std::size_t cols = truth_batch.rank() == 2 ? truth_batch.cols() : truth_batch.size();
  double acc = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      const double t = truth_batch[i * cols + j];
      const double a = approx_batch[i * cols + j];
      num += (t - a) * (t - a);
      den += t * t;
    }
    if (!(den > 0.0)) {
      throw NumericError("mnse: zero-norm truth row " + std::to_string(i));
    }
    acc += num / den;
  }
  return acc / static_cast<double>(rows);
}

double coverage_2sigma(const Tensor& truth, const Tensor& means, const Tensor& stdevs) {
  ad::require_same_shape(truth, means, "coverage_2sigma");
  ad::require_same_shape(truth, stdevs, "coverage_2sigma");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (stdevs[i] < 0.0) {
      throw NumericError("coverage_2sigma: negative stdev at coordinate " + std::to_string(i));
    }
    if (std::fabs(truth[i] - means[i]) <= 2.0 * stdevs[i]) ++hits;
  }
  if (truth.size() == 0) return 0.0;
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

}  // namespace wrvi
