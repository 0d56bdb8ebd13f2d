// Copyright (C) 2026 SMI contributors
// SPDX-License-Identifier: Apache-2.0

#include "smi/runtime/mapping.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "smi/common/error.hpp"

namespace smi::rt {

std::string_view axis_name(std::size_t axis) {
  static constexpr std::array<std::string_view, kAxes> names = {
      "linear_x", "linear_y", "linear_z", "angular_x", "angular_y", "angular_z", "gripper", "wheel"};
  return axis < kAxes ? names[axis] : "invalid";
}

PairTable PairTable::defaults() {
  using C = ContactClass;
  return {{{
      {C::TorqueLeft, C::TorqueRight},
      {C::TorqueForward, C::TorqueBackward},
      {C::TorqueClock, C::TorqueAnticlock},
      {C::GrabLeft, C::GrabRight},
      {C::GrabForward, C::GrabBackward},
      {C::GrabClock, C::GrabAnticlock},
      {C::TouchOutside, C::TouchInside},
      {C::Push, C::Pull},
  }}};
}

void PairTable::flip(std::size_t axis) {
  if (axis >= kAxes) throw Error(ErrorKind::config_invalid, "axis index out of range");
  std::swap(pairs[axis].positive, pairs[axis].negative);
}

void PairTable::validate() const {
  std::array<int, kNumClasses> seen{};
  for (const auto& p : pairs) {
    ++seen[index_of(p.positive)];
    ++seen[index_of(p.negative)];
  }
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const int want = static_cast<ContactClass>(c) == ContactClass::NoTouch ? 0 : 1;
    if (seen[c] != want)
      throw Error(ErrorKind::config_invalid,
                  "pair table uses " + std::string(class_name(static_cast<ContactClass>(c))) + " " +
                      std::to_string(seen[c]) + " times");
  }
}

GainTable GainTable::defaults() {
  GainTable g;
  // m/s, rad/s, m/s for the gripper and rad/s for the wheel, per newton.
  g.khat = {0.01, 0.01, 0.01, 0.03, 0.03, 0.03, 0.002, 0.05};
  g.saturation = {0.25, 0.25, 0.25, 0.8, 0.8, 0.8, 0.05, 1.5};
  for (std::size_t i = 0; i < kAxes; ++i) g.deadzone[i] = 0.05 * g.saturation[i];
  return g;
}

void GainTable::validate() const {
  for (std::size_t i = 0; i < kAxes; ++i) {
    if (!(khat[i] > 0.0)) throw Error(ErrorKind::config_invalid, std::string(axis_name(i)) + ": khat must be > 0");
    if (!(deadzone[i] >= 0.0) || !(saturation[i] > deadzone[i]))
      throw Error(ErrorKind::config_invalid, std::string(axis_name(i)) + ": need saturation > deadzone >= 0");
  }
}

CommandVector raw_command(const ClassProbs& probs, double force_norm, const PairTable& pairs,
                          const GainTable& gains) {
  CommandVector out{};
  for (std::size_t i = 0; i < kAxes; ++i) {
    const double dp = double(probs[index_of(pairs.pairs[i].positive)]) - double(probs[index_of(pairs.pairs[i].negative)]);
    out[i] = gains.khat[i] * force_norm * dp;
  }
  return out;
}

double shape_axis(double raw, double deadzone, double saturation) {
  const double mag = std::abs(raw);
  if (mag < deadzone || mag == 0.0) return 0.0;
  return std::copysign(std::min(mag - deadzone, saturation), raw);
}

CommandVector map_command(const ClassProbs& probs, const sense::Vec3& force, const PairTable& pairs,
                          const GainTable& gains) {
  CommandVector out = raw_command(probs, sense::norm(force), pairs, gains);
  for (std::size_t i = 0; i < kAxes; ++i) out[i] = shape_axis(out[i], gains.deadzone[i], gains.saturation[i]);
  return out;
}

SmoothingBuffer::SmoothingBuffer(std::size_t window) : window_(window) {
  if (window_ == 0) throw Error(ErrorKind::config_invalid, "smoothing window must be positive");
}

ClassProbs SmoothingBuffer::push(const ClassProbs& p) {
  buf_.push_back(p);
  if (buf_.size() > window_) buf_.pop_front();
  std::array<double, kNumClasses> acc{};
  for (const auto& q : buf_)
    for (std::size_t c = 0; c < kNumClasses; ++c) acc[c] += q[c];
  ClassProbs out{};
  const double n = double(buf_.size());
  for (std::size_t c = 0; c < kNumClasses; ++c) out[c] = static_cast<float>(acc[c] / n);
  return out;
}

nlohmann::json PoseState::to_json() const {
  return {{"position", position}, {"rpy", rpy}, {"gripper_gap", gripper_gap}, {"wheel", wheel}};
}

PoseState integrate_sim(const PoseState& s, const CommandVector& cmd, double dt) {
  if (!(dt > 0.0)) throw Error(ErrorKind::config_invalid, "dt must be positive");
  PoseState n = s;
  for (std::size_t k = 0; k < 3; ++k) {
    n.position[k] += cmd[k] * dt;
    n.rpy[k] += cmd[3 + k] * dt;
  }
  n.gripper_gap = std::clamp(s.gripper_gap + cmd[6] * dt, 0.0, s.max_gap);
  n.wheel += cmd[7] * dt;
  return n;
}

}  // namespace smi::rt
