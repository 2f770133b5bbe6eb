#include "wrvi/prob/priors.hpp"

#include <cmath>
#include <limits>

#include "wrvi/common.hpp"
#include "wrvi/prob/gaussian.hpp"

namespace wrvi {

using ad::Tensor;

void PriorBlock::validate() const {
  if (size == 0) throw ConfigError("prior block '" + name + "': size must be >= 1");
  switch (kind) {
    case Kind::normal:
      if (!(variance > 0.0)) throw ConfigError("prior block '" + name + "': variance must be > 0");
      break;
    case Kind::uniform:
      if (!(low < high)) throw ConfigError("prior block '" + name + "': requires low < high");
      break;
    case Kind::delta:
      break;
  }
}

std::size_t PriorSpec::dim() const {
  std::size_t d = 0;
  for (const auto& b : blocks) d += b.size;
  return d;
}

std::pair<std::size_t, std::size_t> PriorSpec::block_range(const std::string& name) const {
  std::size_t off = 0;
  for (const auto& b : blocks) {
    if (b.name == name) return {off, b.size};
    off += b.size;
  }
  throw ConfigError("prior spec has no block named '" + name + "'");
}

bool PriorSpec::has_block(const std::string& name) const {
  for (const auto& b : blocks) {
    if (b.name == name) return true;
  }
  return false;
}

Tensor PriorSpec::sample(RandomStream& rng) const {
  Tensor out = Tensor::zeros({dim()});
  std::size_t off = 0;
  for (const auto& b : blocks) {
    b.validate();
    for (std::size_t i = 0; i < b.size; ++i) {
      switch (b.kind) {
        case PriorBlock::Kind::normal:
          out[off + i] = b.mean + std::sqrt(b.variance) * rng.normal();
          break;
        case PriorBlock::Kind::uniform:
          out[off + i] = rng.uniform(b.low, b.high);
          break;
        case PriorBlock::Kind::delta:
          out[off + i] = b.value;
          break;
      }
    }
    off += b.size;
  }
  return out;
}

double PriorSpec::log_density(const Tensor& x) const {
  if (x.size() != dim()) {
    throw ShapeError("prior log_density: x has " + std::to_string(x.size()) +
                     " entries, prior has " + std::to_string(dim()));
  }
  double acc = 0.0;
  std::size_t off = 0;
  for (const auto& b : blocks) {
    for (std::size_t i = 0; i < b.size; ++i) {
      const double v = x[off + i];
      switch (b.kind) {
        case PriorBlock::Kind::normal: {
          const double d = v - b.mean;
          acc += -0.5 * (d * d / b.variance + std::log(b.variance) + kLn2Pi);
          break;
        }
        case PriorBlock::Kind::uniform:
          if (v < b.low || v > b.high) return -std::numeric_limits<double>::infinity();
          acc += -std::log(b.high - b.low);
          break;
        case PriorBlock::Kind::delta:
          break;  // fixed coordinates contribute nothing
      }
    }
    off += b.size;
  }
  return acc;
}

Tensor PriorSpec::mean() const {
  Tensor out = Tensor::zeros({dim()});
  std::size_t off = 0;
  for (const auto& b : blocks) {
    for (std::size_t i = 0; i < b.size; ++i) {
      switch (b.kind) {
        case PriorBlock::Kind::normal: out[off + i] = b.mean; break;
        case PriorBlock::Kind::uniform: out[off + i] = 0.5 * (b.low + b.high); break;
        case PriorBlock::Kind::delta: out[off + i] = b.value; break;
      }
    }
    off += b.size;
  }
  return out;
}

}  // namespace wrvi
