// Copyright (C) 2026 SMI contributors
// SPDX-License-Identifier: Apache-2.0

#include "smi/sensekit/geometry.hpp"

#include <cmath>
#include <fstream>
#include <string>

#include "smi/common/error.hpp"

namespace smi::sense {
namespace {

constexpr double kOrthoTol = 1e-9;

[[noreturn]] void bad(const std::string& msg) { throw Error(ErrorKind::config_invalid, msg); }

}  // namespace

PatchGeometry PatchGeometry::default_grid() {
  PatchGeometry g;
  g.rotations.fill(kIdentity3);
  // Row 0 drops four sites and row 6 its two corners; both sets are
  // symmetric under column reflection.
  auto unused = [](int r, int c) {
    return (r == 0 && (c <= 1 || c >= 5)) || (r == 6 && (c == 0 || c == 6));
  };
  std::array<std::array<int, 7>, 7> index_of{};
  int idx = 0;
  for (int r = 0; r < 7; ++r) {
    for (int c = 0; c < 7; ++c) {
      if (unused(r, c)) {
        index_of[r][c] = -1;
        continue;
      }
      index_of[r][c] = idx;
      g.positions[idx] = {static_cast<double>(c - 3), static_cast<double>(3 - r)};
      ++idx;
    }
  }
  for (int r = 0; r < 7; ++r)
    for (int c = 0; c < 7; ++c)
      if (index_of[r][c] >= 0) g.mirror_map[index_of[r][c]] = index_of[r][6 - c];
  for (auto& f : g.accel_flips) f = {true, false, false};
  return g;
}

void PatchGeometry::validate() const {
  if (!(force_scale > 0.0) || !std::isfinite(force_scale)) bad("force_scale must be positive");
  for (std::size_t i = 0; i < kCells; ++i) {
    const Mat3& r = rotations[i];
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        double dot = 0.0;
        for (int k = 0; k < 3; ++k) dot += r[k * 3 + a] * r[k * 3 + b];
        if (std::abs(dot - (a == b ? 1.0 : 0.0)) > kOrthoTol)
          bad("rotation " + std::to_string(i) + " is not orthonormal");
      }
    }
    const double det = r[0] * (r[4] * r[8] - r[5] * r[7]) - r[1] * (r[3] * r[8] - r[5] * r[6]) +
                       r[2] * (r[3] * r[7] - r[4] * r[6]);
    if (std::abs(det - 1.0) > kOrthoTol) bad("rotation " + std::to_string(i) + " has det != +1");
  }
  for (std::size_t i = 0; i < kCells; ++i) {
    const int j = mirror_map[i];
    if (j < 0 || j >= static_cast<int>(kCells)) bad("mirror_map entry out of range");
    if (mirror_map[j] != static_cast<int>(i)) bad("mirror_map is not an involution");
    if (accel_flips[i] != accel_flips[j]) bad("accel_flips differ between mirrored cells");
  }
}

PatchGeometry PatchGeometry::from_json(const nlohmann::json& j) {
  PatchGeometry g = default_grid();
  try {
    if (j.contains("rotations")) {
      const auto& rot = j.at("rotations");
      if (rot.size() == kCells * 9 && rot[0].is_number()) {
        for (std::size_t i = 0; i < kCells; ++i)
          for (std::size_t k = 0; k < 9; ++k) g.rotations[i][k] = rot[i * 9 + k].get<double>();
      } else if (rot.size() == kCells) {
        for (std::size_t i = 0; i < kCells; ++i) {
          if (rot[i].size() != 9) bad("each rotation needs 9 values");
          for (std::size_t k = 0; k < 9; ++k) g.rotations[i][k] = rot[i][k].get<double>();
        }
      } else {
        bad("rotations must be 43x9");
      }
    }
    if (j.contains("force_scale")) g.force_scale = j.at("force_scale").get<double>();
    if (j.contains("mirror_map")) {
      const auto& m = j.at("mirror_map");
      if (m.size() != kCells) bad("mirror_map must have 43 entries");
      for (std::size_t i = 0; i < kCells; ++i) g.mirror_map[i] = m[i].get<int>();
    }
    if (j.contains("accel_flips")) {
      const auto& f = j.at("accel_flips");
      if (f.size() != kCells) bad("accel_flips must have 43 entries");
      for (std::size_t i = 0; i < kCells; ++i) {
        if (f[i].size() != 3) bad("accel_flips entries need 3 flags");
        for (std::size_t a = 0; a < 3; ++a) {
          const auto& v = f[i][a];
          // -1 (sign flip) / +1, or booleans.
          g.accel_flips[i][a] = v.is_boolean() ? v.get<bool>() : v.get<double>() < 0.0;
        }
      }
    }
    if (j.contains("positions")) {
      const auto& p = j.at("positions");
      if (p.size() != kCells) bad("positions must have 43 entries");
      for (std::size_t i = 0; i < kCells; ++i)
        g.positions[i] = {p[i].at(0).get<double>(), p[i].at(1).get<double>()};
    }
  } catch (const nlohmann::json::exception& e) {
    bad(std::string("geometry JSON: ") + e.what());
  }
  g.validate();
  return g;
}

PatchGeometry PatchGeometry::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::io_failure, "cannot open geometry file " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    bad("geometry file " + path + ": " + e.what());
  }
  return from_json(j);
}

nlohmann::json PatchGeometry::to_json() const {
  nlohmann::json j;
  j["force_scale"] = force_scale;
  auto& rot = j["rotations"] = nlohmann::json::array();
  for (const auto& r : rotations) rot.push_back(r);
  j["mirror_map"] = mirror_map;
  auto& flips = j["accel_flips"] = nlohmann::json::array();
  for (const auto& f : accel_flips)
    flips.push_back({f[0] ? -1 : 1, f[1] ? -1 : 1, f[2] ? -1 : 1});
  auto& pos = j["positions"] = nlohmann::json::array();
  for (const auto& p : positions) pos.push_back({p[0], p[1]});
  return j;
}

Vec3 pseudo_force(std::span<const float> values, const PatchGeometry& geom) {
  if (values.size() != kFrameDim)
    throw Error(ErrorKind::dimension_mismatch, "frame must have 301 values");
  Vec3 f{0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < kCells; ++i) {
    const float* v = values.data() + i * kChannels;
    const double s = static_cast<double>(v[0]) + v[1] + v[2];
    if (s == 0.0) continue;
    const Mat3& r = geom.rotations[i];
    // R * (0, 0, s) is the third column scaled by s.
    f[0] += r[2] * s;
    f[1] += r[5] * s;
    f[2] += r[8] * s;
  }
  const double k = geom.force_scale / 3.0;
  return {f[0] * k, f[1] * k, f[2] * k};
}

Vec3 pseudo_force(const SensorFrame& frame, const PatchGeometry& geom) {
  const FrameVec v = frame.flat();
  return pseudo_force(v, geom);
}

double norm(const Vec3& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }

void mirror_values(std::span<const float> in, std::span<float> out, const PatchGeometry& geom) {
  if (in.size() != kFrameDim || out.size() != kFrameDim)
    throw Error(ErrorKind::dimension_mismatch, "frame must have 301 values");
  for (std::size_t i = 0; i < kCells; ++i) {
    const float* src = in.data() + i * kChannels;
    float* dst = out.data() + static_cast<std::size_t>(geom.mirror_map[i]) * kChannels;
    for (std::size_t ch = 0; ch < kAccel0; ++ch) dst[ch] = src[ch];
    for (std::size_t a = 0; a < 3; ++a)
      dst[kAccel0 + a] = geom.accel_flips[i][a] ? 1.0f - src[kAccel0 + a] : src[kAccel0 + a];
  }
}

SensorFrame mirror_frame(const SensorFrame& frame, const PatchGeometry& geom) {
  const FrameVec in = frame.flat();
  FrameVec out{};
  mirror_values(in, out, geom);
  return SensorFrame::from_flat(out, frame.index);
}

}  // namespace smi::sense
