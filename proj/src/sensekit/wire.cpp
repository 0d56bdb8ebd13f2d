// Copyright (C) 2026 SMI contributors
// SPDX-License-Identifier: Apache-2.0

#include "smi/sensekit/wire.hpp"

#include <fstream>
#include <string>

#include "json.hpp"
#include "smi/common/binary_io.hpp"
#include "smi/common/error.hpp"

namespace smi::sense {

std::vector<std::uint8_t> encode_binary(const SensorFrame& frame) {
  const FrameVec v = frame.flat();
  std::vector<std::uint8_t> out(kBinaryFrameBytes);
  io::put_u32(out.data(), frame.index);
  for (std::size_t i = 0; i < kFrameDim; ++i) io::put_f32(out.data() + 4 + 4 * i, v[i]);
  return out;
}

SensorFrame decode_binary(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kBinaryFrameBytes)
    throw Error(ErrorKind::dimension_mismatch,
                "binary frame needs 1208 bytes, got " + std::to_string(bytes.size()));
  FrameVec v{};
  for (std::size_t i = 0; i < kFrameDim; ++i) v[i] = io::get_f32(bytes.data() + 4 + 4 * i);
  return SensorFrame::from_flat(v, io::get_u32(bytes.data()));
}

std::string to_json_line(const SensorFrame& frame) {
  const FrameVec v = frame.flat();
  nlohmann::json j;
  j["t"] = frame.index;
  j["o"] = v;
  return j.dump();
}

SensorFrame from_json_line(std::string_view line) {
  nlohmann::json j = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object())
    throw Error(ErrorKind::protocol_violation, "frame line is not a JSON object");
  if (!j.contains("o") || !j["o"].is_array())
    throw Error(ErrorKind::protocol_violation, "frame line lacks array field 'o'");
  const auto& o = j["o"];
  if (o.size() != kFrameDim)
    throw Error(ErrorKind::dimension_mismatch,
                "frame has " + std::to_string(o.size()) + " values, expected 301");
  FrameVec v{};
  for (std::size_t i = 0; i < kFrameDim; ++i) {
    if (!o[i].is_number()) throw Error(ErrorKind::protocol_violation, "non-numeric frame value");
    v[i] = o[i].get<float>();
  }
  std::uint32_t t = 0;
  if (j.contains("t")) {
    if (!j["t"].is_number_integer() || j["t"].get<long long>() < 0)
      throw Error(ErrorKind::protocol_violation, "'t' must be a non-negative integer");
    t = j["t"].get<std::uint32_t>();
  }
  return SensorFrame::from_flat(v, t);
}

FrameFileFormat guess_format(const std::string& path) {
  auto ends_with = [&](std::string_view suf) {
    return path.size() >= suf.size() && path.compare(path.size() - suf.size(), suf.size(), suf) == 0;
  };
  return ends_with(".jsonl") || ends_with(".json") ? FrameFileFormat::json_lines
                                                   : FrameFileFormat::binary;
}

std::vector<SensorFrame> read_frame_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::io_failure, "cannot open frame file " + path);
  std::vector<SensorFrame> frames;
  if (guess_format(path) == FrameFileFormat::json_lines) {
    std::string line;
    while (std::getline(is, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      frames.push_back(from_json_line(line));
    }
    return frames;
  }
  std::vector<std::uint8_t> buf(kBinaryFrameBytes);
  while (is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size())))
    frames.push_back(decode_binary(buf));
  if (is.gcount() != 0)
    throw Error(ErrorKind::io_failure, "trailing partial frame in " + path);
  return frames;
}

void write_frame_file(const std::string& path, std::span<const SensorFrame> frames) {
  const bool text = guess_format(path) == FrameFileFormat::json_lines;
  io::write_atomically(path, [&](std::ostream& os) {
    for (const auto& f : frames) {
      if (text) {
        os << to_json_line(f) << '\n';
      } else {
        const auto bytes = encode_binary(f);
        os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
      }
    }
  });
}

}  // namespace smi::sense
