// Copyright (C) 2026 SMI contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <map>
#include <string_view>

#include "json.hpp"
#include "smi/common/classes.hpp"
#include "smi/sensekit/frame.hpp"
#include "smi/sensekit/geometry.hpp"

namespace smi::synth {

using CellWeights = std::array<double, sense::kCells>;

struct ClassTemplate {
  ContactClass cls = ContactClass::NoTouch;
  CellWeights footprint{};         // contact weight per cell, [0, 1]
  CellWeights proximity{};         // closeness per cell while the hand is present
  std::array<double, 2> tangential_dir{0.0, 0.0};  // unit or zero
  int rotation = 0;                // +1 clockwise, -1 anticlockwise (seen from outside)
  int normal_drive = 0;            // +1 pull away from the support, -1 press into it
  double force_gain = 1.0;
  std::array<double, 3> noise_sigma{0.03, 0.03, 0.03};  // force, proximity, accel

  /// In-plane drive felt at a cell position.
  std::array<double, 2> drive_at(double x, double y) const;
};

using TemplateSet = std::array<ClassTemplate, kNumClasses>;

/// One template per class for the given patch layout.
TemplateSet class_templates_default(const sense::PatchGeometry& geom = sense::PatchGeometry::default_grid());

enum class SupportKind : std::uint8_t { soft, rigid };

std::string_view support_name(SupportKind k);
SupportKind parse_support(std::string_view s);

struct SupportModel {
  SupportKind kind = SupportKind::soft;
  double coupling = 1.0;            // accel response gain
  double accel_noise_sigma = 0.03;

  static SupportModel soft() { return {SupportKind::soft, 1.0, 0.03}; }
  static SupportModel rigid() { return {SupportKind::rigid, 0.0, 0.08}; }
  static SupportModel of(SupportKind k) { return k == SupportKind::soft ? soft() : rigid(); }

  /// ConfigInvalid when rigid support has non-zero coupling or sigma < 0.
  void validate() const;
  nlohmann::json to_json() const;
  static SupportModel from_json(const nlohmann::json& j);
};

}  // namespace smi::synth
