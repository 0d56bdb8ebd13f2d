// Copyright (C) 2026 SMI contributors
// SPDX-License-Identifier: Apache-2.0

#include "smi/synthgen/templates.hpp"

#include <cmath>

#include "smi/common/error.hpp"

namespace smi::synth {

using sense::kCells;

std::array<double, 2> ClassTemplate::drive_at(double x, double y) const {
  if (rotation != 0) {
    const double r = std::hypot(x, y);
    if (r == 0.0) return {0.0, 0.0};
    return {rotation * y / r, -rotation * x / r};
  }
  return tangential_dir;
}

namespace {

enum class Region { all, inner, outer, grip };

bool in_region(Region reg, double x, double y) {
  const double m = std::max(std::abs(x), std::abs(y));
  switch (reg) {
    case Region::all: return true;
    case Region::inner: return m <= 1.0;
    case Region::outer: return m >= 3.0;
    case Region::grip: return std::abs(x) >= 2.0 && std::abs(y) <= 2.0;
  }
  return false;
}

ClassTemplate make(ContactClass c, const sense::PatchGeometry& g, Region reg, double prox_on,
                   double prox_off, double gain) {
  ClassTemplate t;
  t.cls = c;
  t.force_gain = gain;
  for (std::size_t i = 0; i < kCells; ++i) {
    const bool on = in_region(reg, g.positions[i][0], g.positions[i][1]);
    t.footprint[i] = on ? 1.0 : 0.0;
    t.proximity[i] = on ? prox_on : prox_off;
  }
  return t;
}

}  // namespace

TemplateSet class_templates_default(const sense::PatchGeometry& g) {
  using C = ContactClass;
  TemplateSet s;
  const std::array<double, 2> left{-1, 0}, right{1, 0}, fwd{0, 1}, back{0, -1};

  // Whole hand on the patch.
  const C torque[] = {C::TorqueLeft, C::TorqueRight, C::TorqueForward, C::TorqueBackward,
                      C::TorqueClock, C::TorqueAnticlock};
  // Thumb and fingers on the two side strips, palm held off the surface.
  const C grab[] = {C::GrabLeft, C::GrabRight, C::GrabForward, C::GrabBackward, C::GrabClock,
                    C::GrabAnticlock};
  const std::array<double, 2> dirs[] = {left, right, fwd, back, {0, 0}, {0, 0}};
  const int rot[] = {0, 0, 0, 0, 1, -1};
  for (int k = 0; k < 6; ++k) {
    ClassTemplate t = make(torque[k], g, Region::all, 0.9, 0.9, 1.0);
    t.tangential_dir = dirs[k];
    t.rotation = rot[k];
    s[index_of(torque[k])] = t;
    ClassTemplate u = make(grab[k], g, Region::grip, 0.9, 0.35, 1.0);
    u.tangential_dir = dirs[k];
    u.rotation = rot[k];
    s[index_of(grab[k])] = u;
  }
  s[index_of(C::TouchOutside)] = make(C::TouchOutside, g, Region::outer, 0.8, 0.15, 0.7);
  s[index_of(C::TouchInside)] = make(C::TouchInside, g, Region::inner, 0.8, 0.15, 0.7);
  ClassTemplate push = make(C::Push, g, Region::all, 0.95, 0.95, 1.3);
  push.normal_drive = -1;
  s[index_of(C::Push)] = push;
  ClassTemplate pull = make(C::Pull, g, Region::all, 0.85, 0.85, 0.45);
  pull.normal_drive = 1;
  s[index_of(C::Pull)] = pull;
  ClassTemplate none;
  none.cls = C::NoTouch;
  none.force_gain = 0.0;
  s[index_of(C::NoTouch)] = none;
  return s;
}

std::string_view support_name(SupportKind k) { return k == SupportKind::soft ? "soft" : "rigid"; }

SupportKind parse_support(std::string_view s) {
  if (s == "soft") return SupportKind::soft;
  if (s == "rigid") return SupportKind::rigid;
  throw Error(ErrorKind::config_invalid, "support must be soft or rigid, got '" + std::string(s) + "'");
}

void SupportModel::validate() const {
  if (kind == SupportKind::rigid && coupling != 0.0)
    throw Error(ErrorKind::config_invalid, "rigid support must have zero accel coupling");
  if (!(coupling >= 0.0) || !(accel_noise_sigma >= 0.0))
    throw Error(ErrorKind::config_invalid, "support coupling and noise must be non-negative");
}

nlohmann::json SupportModel::to_json() const {
  return {{"kind", support_name(kind)}, {"coupling", coupling}, {"accel_noise_sigma", accel_noise_sigma}};
}

SupportModel SupportModel::from_json(const nlohmann::json& j) {
  if (j.is_string()) return of(parse_support(j.get<std::string>()));
  SupportModel m = of(parse_support(j.value("kind", std::string("soft"))));
  m.coupling = j.value("coupling", m.coupling);
  m.accel_noise_sigma = j.value("accel_noise_sigma", m.accel_noise_sigma);
  m.validate();
  return m;
}

}  // namespace smi::synth
