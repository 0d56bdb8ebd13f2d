// Copyright (C) 2026 SMI contributors
// SPDX-License-Identifier: Apache-2.0
//
// Little-endian scalar encoding shared by the frame, dataset and
// checkpoint formats.

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "smi/common/error.hpp"

namespace smi::io {

inline void put_u32(std::uint8_t* out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

inline std::uint32_t get_u32(const std::uint8_t* in) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[i]) << (8 * i);
  return v;
}

inline void put_f32(std::uint8_t* out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }
inline float get_f32(const std::uint8_t* in) { return std::bit_cast<float>(get_u32(in)); }

inline void write_u32(std::ostream& os, std::uint32_t v) {
  std::uint8_t b[4];
  put_u32(b, v);
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t read_u32(std::istream& is) {
  std::uint8_t b[4] = {};
  is.read(reinterpret_cast<char*>(b), 4);
  return get_u32(b);
}

// Bulk float32 I/O; a straight copy on little-endian hosts.
inline void write_f32s(std::ostream& os, std::span<const float> v) {
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(v.size() * sizeof(float)));
  } else {
    std::vector<std::uint8_t> buf(v.size() * 4);
    for (std::size_t i = 0; i < v.size(); ++i) put_f32(buf.data() + 4 * i, v[i]);
    os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  }
}

inline void read_f32s(std::istream& is, std::span<float> v) {
  if constexpr (std::endian::native == std::endian::little) {
    is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(float)));
  } else {
    std::vector<std::uint8_t> buf(v.size() * 4);
    is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = get_f32(buf.data() + 4 * i);
  }
}

// Writes to `path + ".tmp"` then renames, so readers never see a partial file.
template <class WriteFn>
void write_atomically(const std::string& path, WriteFn&& fn) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw Error(ErrorKind::io_failure, "cannot open " + tmp);
    fn(os);
    os.flush();
    if (!os) throw Error(ErrorKind::io_failure, "write failed: " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::io_failure, "rename " + tmp + " -> " + path + ": " + ec.message());
}

}  // namespace smi::io
