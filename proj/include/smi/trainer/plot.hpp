// Copyright (C) 2026 SMI contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "smi/trainer/trainer.hpp"

namespace smi::train {

struct PlotOptions {
  std::string title = "Validation ACC";
  double reference = 0.95;  // dashed horizontal line; <= 0 disables it
  int width = 720;
  int height = 440;
};

/// Standalone SVG: validation ACC against epoch, one mean curve per
/// condition with a band spanning the per-epoch seed min..max.
std::string render_acc_svg(const AblationReport& report, const PlotOptions& opt = {});

}  // namespace smi::train
