#pragma once

#include <string>
#include <vector>

#include "wrvi/ad/tensor.hpp"
#include "wrvi/util/rng.hpp"

namespace wrvi {

// One independent block of a prior: normal (mean, variance), uniform
// (low, high), or delta (fixed value). Blocks partition the vector in
// declaration order.
struct PriorBlock {
  enum class Kind { normal, uniform, delta };
  std::string name;
  Kind kind = Kind::delta;
  std::size_t size = 1;
  double mean = 0.0, variance = 1.0;  // normal
  double low = 0.0, high = 1.0;       // uniform
  double value = 0.0;                 // delta

  void validate() const;
};

struct PriorSpec {
  std::vector<PriorBlock> blocks;

  std::size_t dim() const;
  // Offset/size of a named block; throws if absent.
  std::pair<std::size_t, std::size_t> block_range(const std::string& name) const;
  bool has_block(const std::string& name) const;

  ad::Tensor sample(RandomStream& rng) const;
  // Sum of block log densities. Delta blocks contribute zero; a point
  // outside a uniform support returns -inf.
  double log_density(const ad::Tensor& x) const;
  // Mean of the distribution (delta blocks give their fixed value).
  ad::Tensor mean() const;
};

}  // namespace wrvi
