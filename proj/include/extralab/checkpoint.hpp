// Copyright 2026 The extralab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "extralab/tensor.hpp"

namespace extralab {

// Checkpoint layout:
//   bytes 0..7   magic "EXLCKPT1"
//   bytes 8..15  header length H, unsigned 64-bit little-endian
//   next H bytes UTF-8 JSON header:
//     {"format": "extralab-checkpoint", "version": 1, "endianness": "little",
//      "dtype": "float32", "tensors": [{"name", "shape", "offset", "nbytes"}],
//      "meta": {...}}
//   remainder    tensor blob; offsets are relative to the blob start.
inline constexpr char kCheckpointMagic[8] = {'E', 'X', 'L', 'C', 'K', 'P', 'T', '1'};

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

struct CheckpointEntry {
  std::string name;
  Shape shape;
  std::vector<float> values;
};

struct Checkpoint {
  nlohmann::json meta;
  std::vector<CheckpointEntry> tensors;
};

void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors,
                     const nlohmann::json& meta);
// Throws std::runtime_error on I/O failure or a malformed file.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace extralab
