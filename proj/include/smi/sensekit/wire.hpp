// Copyright (C) 2026 SMI contributors
// SPDX-License-Identifier: Apache-2.0
//
// Frame encodings: binary (u32 index + 301 float32, little-endian, 1208
// bytes) and JSON lines ({"t": <int>, "o": [301 floats]}).

#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "smi/sensekit/frame.hpp"

namespace smi::sense {

inline constexpr std::size_t kBinaryFrameBytes = 4 + 4 * kFrameDim;

std::vector<std::uint8_t> encode_binary(const SensorFrame& frame);
/// Throws DimensionMismatch on a short buffer. Does not range-check.
SensorFrame decode_binary(std::span<const std::uint8_t> bytes);

std::string to_json_line(const SensorFrame& frame);
/// Throws ProtocolViolation on malformed JSON or missing fields and
/// DimensionMismatch when `o` does not hold 301 numbers.
SensorFrame from_json_line(std::string_view line);

enum class FrameFileFormat { binary, json_lines };

/// Picks the format from the extension (.jsonl / .json -> JSON lines).
FrameFileFormat guess_format(const std::string& path);
std::vector<SensorFrame> read_frame_file(const std::string& path);
void write_frame_file(const std::string& path, std::span<const SensorFrame> frames);

}  // namespace smi::sense
