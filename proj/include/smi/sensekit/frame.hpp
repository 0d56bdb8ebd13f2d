// Copyright (C) 2026 SMI contributors
// SPDX-License-Identifier: Apache-2.0
//
// Skin-patch observation model: 43 cells x 7 normalized channels
// (three vertical forces, proximity, three-axis acceleration), flattened
// cell-major into a 301-vector.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace smi::sense {

inline constexpr std::size_t kCells = 43;
inline constexpr std::size_t kChannels = 7;
inline constexpr std::size_t kFrameDim = kCells * kChannels;  // 301

// Channel offsets inside one cell.
inline constexpr std::size_t kForce0 = 0;
inline constexpr std::size_t kProximity = 3;
inline constexpr std::size_t kAccel0 = 4;

// Rest value of the normalized accelerometer (zero acceleration).
inline constexpr float kAccelRest = 0.5f;

struct CellReading {
  std::array<float, 3> force{0.0f, 0.0f, 0.0f};
  float proximity = 0.0f;
  std::array<float, 3> accel{kAccelRest, kAccelRest, kAccelRest};

  friend bool operator==(const CellReading&, const CellReading&) = default;
};

using FrameVec = std::array<float, kFrameDim>;

struct SensorFrame {
  std::uint32_t index = 0;  // frame count at 100 Hz
  std::vector<CellReading> cells = std::vector<CellReading>(kCells);

  static SensorFrame rest(std::uint32_t index = 0);
  /// Throws DimensionMismatch unless `values.size() == 301`.
  static SensorFrame from_flat(std::span<const float> values, std::uint32_t index = 0);
  FrameVec flat() const;

  friend bool operator==(const SensorFrame&, const SensorFrame&) = default;
};

/// Returns `frame` if it has 43 cells and every channel is finite and in
/// [0,1]; throws DimensionMismatch / OutOfRange otherwise.
const SensorFrame& validate_frame(const SensorFrame& frame);
void validate_values(std::span<const float> values);

struct ModalityMask {
  bool force = true;
  bool proximity = true;
  bool accel = true;

  static ModalityMask full() { return {}; }
  /// Accepts full, no-force, no-prox, no-accel.
  static ModalityMask parse(std::string_view name);
  std::string_view name() const;
  bool is_full() const { return force && proximity && accel; }

  friend bool operator==(const ModalityMask&, const ModalityMask&) = default;
};

/// Replaces excluded channels by their rest value (0 for force and
/// proximity, 0.5 for acceleration). Throws AllMasked when nothing is
/// enabled.
SensorFrame apply_mask(const SensorFrame& frame, const ModalityMask& mask);
void apply_mask_inplace(std::span<float> values, const ModalityMask& mask);

}  // namespace smi::sense
