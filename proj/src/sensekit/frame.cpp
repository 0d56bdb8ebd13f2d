// Copyright (C) 2026 SMI contributors
// SPDX-License-Identifier: Apache-2.0

#include "smi/sensekit/frame.hpp"

#include <cmath>
#include <string>

#include "smi/common/error.hpp"

namespace smi::sense {

SensorFrame SensorFrame::rest(std::uint32_t index) {
  SensorFrame f;
  f.index = index;
  return f;
}

SensorFrame SensorFrame::from_flat(std::span<const float> values, std::uint32_t index) {
  if (values.size() != kFrameDim)
    throw Error(ErrorKind::dimension_mismatch,
                "frame has " + std::to_string(values.size()) + " values, expected 301");
  SensorFrame f;
  f.index = index;
  for (std::size_t c = 0; c < kCells; ++c) {
    const float* v = values.data() + c * kChannels;
    CellReading& cell = f.cells[c];
    cell.force = {v[0], v[1], v[2]};
    cell.proximity = v[3];
    cell.accel = {v[4], v[5], v[6]};
  }
  return f;
}

FrameVec SensorFrame::flat() const {
  if (cells.size() != kCells)
    throw Error(ErrorKind::dimension_mismatch,
                "frame has " + std::to_string(cells.size()) + " cells, expected 43");
  FrameVec out{};
  for (std::size_t c = 0; c < kCells; ++c) {
    float* v = out.data() + c * kChannels;
    const CellReading& cell = cells[c];
    v[0] = cell.force[0];
    v[1] = cell.force[1];
    v[2] = cell.force[2];
    v[3] = cell.proximity;
    v[4] = cell.accel[0];
    v[5] = cell.accel[1];
    v[6] = cell.accel[2];
  }
  return out;
}

void validate_values(std::span<const float> values) {
  if (values.size() != kFrameDim)
    throw Error(ErrorKind::dimension_mismatch,
                "frame has " + std::to_string(values.size()) + " values, expected 301");
  for (std::size_t i = 0; i < values.size(); ++i) {
    const float x = values[i];
    if (!std::isfinite(x) || x < 0.0f || x > 1.0f)
      throw Error(ErrorKind::out_of_range, "cell " + std::to_string(i / kChannels) + " channel " +
                                               std::to_string(i % kChannels) + " = " +
                                               std::to_string(x));
  }
}

const SensorFrame& validate_frame(const SensorFrame& frame) {
  if (frame.cells.size() != kCells)
    throw Error(ErrorKind::dimension_mismatch,
                "frame has " + std::to_string(frame.cells.size()) + " cells, expected 43");
  const FrameVec v = frame.flat();
  validate_values(v);
  return frame;
}

ModalityMask ModalityMask::parse(std::string_view name) {
  if (name == "full") return {true, true, true};
  if (name == "no-force") return {false, true, true};
  if (name == "no-prox") return {true, false, true};
  if (name == "no-accel") return {true, true, false};
  throw Error(ErrorKind::config_invalid, "unknown modality mask: " + std::string(name));
}

std::string_view ModalityMask::name() const {
  if (force && proximity && accel) return "full";
  if (!force && proximity && accel) return "no-force";
  if (force && !proximity && accel) return "no-prox";
  if (force && proximity && !accel) return "no-accel";
  return "custom";
}

void apply_mask_inplace(std::span<float> values, const ModalityMask& mask) {
  if (!mask.force && !mask.proximity && !mask.accel)
    throw Error(ErrorKind::all_masked, "at least one modality must stay enabled");
  if (values.size() != kFrameDim)
    throw Error(ErrorKind::dimension_mismatch, "frame must have 301 values");
  if (mask.is_full()) return;
  for (std::size_t c = 0; c < kCells; ++c) {
    float* v = values.data() + c * kChannels;
    if (!mask.force) v[0] = v[1] = v[2] = 0.0f;
    if (!mask.proximity) v[3] = 0.0f;
    if (!mask.accel) v[4] = v[5] = v[6] = kAccelRest;
  }
}

SensorFrame apply_mask(const SensorFrame& frame, const ModalityMask& mask) {
  FrameVec v = frame.flat();
  apply_mask_inplace(v, mask);
  return SensorFrame::from_flat(v, frame.index);
}

}  // namespace smi::sense
