#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

namespace wrvi {

// Deterministic random stream. All transforms are explicit functions of
// raw engine draws (no distribution objects with hidden state), so a
// serialized stream resumes bit-exactly.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  // in [0, 1)
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  // Box-Muller; always consumes exactly two draws.
  double normal() {
    double u1 = static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
    double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  std::uint64_t raw() { return engine_(); }

  std::string serialize() const;
  static RandomStream deserialize(const std::string& text);

 private:
  std::mt19937_64 engine_;
};

}  // namespace wrvi
