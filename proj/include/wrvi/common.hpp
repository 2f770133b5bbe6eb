#pragma once

#include <stdexcept>
#include <string>

namespace wrvi {

// Shape or layout violations (mismatched operands, bad dimension chains).
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Non-finite values or domain violations (log/sqrt of non-positive input,
// singular systems, NaN during a backward pass).
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed configs or manifests.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Filesystem failures.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace wrvi
