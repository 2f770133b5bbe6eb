#pragma once

#include <string>

#include "wrvi/train/loop.hpp"

namespace wrvi {

// Checkpoint = UTF-8 JSON manifest (<prefix>.json) describing layout,
// iteration, RNG state and learning rate, plus a binary blob
// (<prefix>.bin) of all parameters and optimizer moments as little-endian
// 64-bit floats in manifest order. The manifest stores byte offsets and a
// CRC32 of the blob; loading refuses on any mismatch.
void save_checkpoint(const std::string& prefix, TrainState& state, const std::string& spec_hash);

TrainState load_checkpoint(const std::string& path, const std::string& expected_spec_hash = "");

// spec_hash recorded in a manifest (empty if file missing fields).
std::string checkpoint_spec_hash(const std::string& path);

}  // namespace wrvi
