// Copyright (C) 2026 SMI contributors
// SPDX-License-Identifier: Apache-2.0
//
// Checkpoint = <stem>.json manifest + <stem>.bin little-endian float32 blob,
// tensors concatenated in manifest order.

#pragma once

#include <string>

#include "json.hpp"
#include "smi/neuralcore/model.hpp"

namespace smi::nn {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  ModelParams<float> params;
  nlohmann::json training;  // free-form metadata (epochs, seed, metrics...)
};

/// Accepts "dir/name", "dir/name.json" or "dir/name.bin"; returns "dir/name".
std::string checkpoint_stem(const std::string& path);

/// Writes the blob, then the manifest; each file is replaced atomically.
void save_checkpoint(const std::string& path, const ModelParams<float>& params,
                     const nlohmann::json& training = nlohmann::json::object());

/// Throws StaleModel on a format version mismatch, IoFailure on missing or
/// short files, DimensionMismatch when the count disagrees with the
/// architecture, NonFinite on NaN/Inf weights.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace smi::nn
