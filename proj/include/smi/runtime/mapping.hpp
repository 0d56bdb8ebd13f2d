// Copyright (C) 2026 SMI contributors
// SPDX-License-Identifier: Apache-2.0
//
// Paired-class command mapping:
//   raw_i = khat_i * |F| * (p(c_i+) - p(c_i-))
//   a_i   = clamp(sign(raw_i) * max(|raw_i| - deadzone_i, 0), +-saturation_i)

#pragma once

#include <array>
#include <cstddef>
#include <deque>
#include <string_view>

#include "json.hpp"
#include "smi/common/classes.hpp"
#include "smi/sensekit/geometry.hpp"

namespace smi::rt {

inline constexpr std::size_t kAxes = 8;

enum class Axis : std::size_t { linear_x, linear_y, linear_z, angular_x, angular_y, angular_z, gripper, wheel };

std::string_view axis_name(std::size_t axis);

struct AxisPair {
  ContactClass positive;
  ContactClass negative;
};

struct PairTable {
  std::array<AxisPair, kAxes> pairs;

  /// Positive class = the first class of each row: TorqueLeft, TorqueForward,
  /// TorqueClock, GrabLeft, GrabForward, GrabClock, TouchOutside, Push.
  static PairTable defaults();
  /// Swaps the two classes of an axis.
  void flip(std::size_t axis);
  /// ConfigInvalid unless the 16 directional classes appear once each and
  /// NoTouch appears nowhere.
  void validate() const;
};

struct GainTable {
  std::array<double, kAxes> khat;
  std::array<double, kAxes> deadzone;
  std::array<double, kAxes> saturation;

  /// Deadzone = 0.05 * saturation on every axis.
  static GainTable defaults();
  /// ConfigInvalid unless khat > 0 and saturation > deadzone >= 0.
  void validate() const;
};

using CommandVector = std::array<double, kAxes>;

/// Pre-deadzone values.
CommandVector raw_command(const ClassProbs& probs, double force_norm, const PairTable& pairs,
                          const GainTable& gains);
double shape_axis(double raw, double deadzone, double saturation);
CommandVector map_command(const ClassProbs& probs, const sense::Vec3& force, const PairTable& pairs,
                          const GainTable& gains);

/// Unweighted mean of the last `window` probability vectors; partial
/// averages during warm-up.
class SmoothingBuffer {
 public:
  explicit SmoothingBuffer(std::size_t window = 5);
  ClassProbs push(const ClassProbs& p);
  void clear() { buf_.clear(); }
  std::size_t size() const { return buf_.size(); }
  std::size_t window() const { return window_; }

 private:
  std::size_t window_;
  std::deque<ClassProbs> buf_;
};

/// Simulated end effector driven by commands.
struct PoseState {
  std::array<double, 3> position{};  // m
  std::array<double, 3> rpy{};       // rad
  double gripper_gap = 0.04;         // m
  double max_gap = 0.08;
  double wheel = 0.0;                // rad

  nlohmann::json to_json() const;
};

/// Euler step; the gripper gap is clamped to [0, max_gap].
PoseState integrate_sim(const PoseState& s, const CommandVector& cmd, double dt);

}  // namespace smi::rt
