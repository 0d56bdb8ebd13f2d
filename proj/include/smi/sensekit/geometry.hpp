// Copyright (C) 2026 SMI contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <span>
#include <string>

#include "json.hpp"

#include "smi/sensekit/frame.hpp"

namespace smi::sense {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<double, 9>;  // row-major

inline constexpr Mat3 kIdentity3{1, 0, 0, 0, 1, 0, 0, 0, 1};

// Cell placement and calibration of one patch. Rotations map the cell
// frame to the patch frame. The mirror map pairs each cell with its
// geometric mirror image on the opposite patch; accelerometer axes listed
// in `accel_flips` change sign under mirroring.
struct PatchGeometry {
  std::array<Mat3, kCells> rotations;
  double force_scale = 1.0;  // Newtons per normalized force unit
  std::array<int, kCells> mirror_map{};
  std::array<std::array<bool, 3>, kCells> accel_flips{};
  // Cell centers in the patch plane, in cell pitches. Used by the
  // synthetic generator; not needed for pseudo-force.
  std::array<std::array<double, 2>, kCells> positions{};

  /// Flat patch: 7x7 grid with six unused corner sites, identity
  /// rotations, column-reflection mirror with x-acceleration flip.
  static PatchGeometry default_grid();
  static PatchGeometry from_json(const nlohmann::json& j);
  static PatchGeometry load(const std::string& path);
  nlohmann::json to_json() const;

  /// Throws ConfigInvalid when a rotation is not orthonormal with det +1,
  /// the mirror map is not an involutive permutation, flips are not
  /// mirror-consistent, or the force scale is not positive.
  void validate() const;
};

/// Translational pseudo-force in the patch frame:
///   F = (k_f / 3) * sum_i R_i * (0, 0, f_i1 + f_i2 + f_i3).
/// Proximity does not contribute.
Vec3 pseudo_force(std::span<const float> values, const PatchGeometry& geom);
Vec3 pseudo_force(const SensorFrame& frame, const PatchGeometry& geom);
double norm(const Vec3& v);

/// Permutes cells by the mirror map and maps flipped accelerometer axes
/// x -> 1 - x. An involution for any valid geometry.
SensorFrame mirror_frame(const SensorFrame& frame, const PatchGeometry& geom);
void mirror_values(std::span<const float> in, std::span<float> out, const PatchGeometry& geom);

}  // namespace smi::sense
