// Copyright (C) 2026 SMI contributors
// SPDX-License-Identifier: Apache-2.0

#include "smi/neuralcore/checkpoint.hpp"

#include <filesystem>
#include <fstream>

#include "smi/common/binary_io.hpp"
#include "smi/common/error.hpp"

namespace smi::nn {

namespace fs = std::filesystem;

std::string checkpoint_stem(const std::string& path) {
  fs::path p(path);
  if (p.extension() == ".json" || p.extension() == ".bin") p.replace_extension();
  return p.string();
}

void save_checkpoint(const std::string& path, const ModelParams<float>& params,
                     const nlohmann::json& training) {
  if (!params.all_finite()) throw Error(ErrorKind::non_finite, "refusing to save non-finite parameters");
  const std::string stem = checkpoint_stem(path);
  const std::string blob = stem + ".bin";
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& t : params.layout)
    tensors.push_back({{"name", t.name}, {"shape", {t.rows, t.cols}}, {"offset", t.offset}});
  const nlohmann::json manifest = {
      {"format_version", kCheckpointVersion},
      {"arch", params.arch.to_json()},
      {"param_count", params.size()},
      {"dtype", "float32-le"},
      {"blob", fs::path(blob).filename().string()},
      {"tensors", tensors},
      {"training", training},
  };
  io::write_atomically(blob, [&](std::ostream& os) { io::write_f32s(os, params.data); });
  io::write_atomically(stem + ".json", [&](std::ostream& os) { os << manifest.dump(2) << '\n'; });
}

Checkpoint load_checkpoint(const std::string& path) {
  const std::string stem = checkpoint_stem(path);
  const std::string mpath = stem + ".json";
  std::ifstream ms(mpath);
  if (!ms) throw Error(ErrorKind::io_failure, "cannot open checkpoint manifest " + mpath);
  nlohmann::json m;
  try {
    ms >> m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::io_failure, mpath + ": " + e.what());
  }
  const int version = m.value("format_version", -1);
  if (version != kCheckpointVersion)
    throw Error(ErrorKind::stale_model, mpath + ": format version " + std::to_string(version) +
                                            ", expected " + std::to_string(kCheckpointVersion));
  Checkpoint ck;
  ck.params = ModelParams<float>::zeros(ArchConfig::from_json(m.at("arch")));
  ck.training = m.value("training", nlohmann::json::object());
  const std::size_t declared = m.value("param_count", std::size_t{0});
  if (declared != ck.params.size())
    throw Error(ErrorKind::dimension_mismatch, mpath + ": param_count " + std::to_string(declared) +
                                                   " does not match architecture (" +
                                                   std::to_string(ck.params.size()) + ")");
  const fs::path blob = fs::path(mpath).parent_path() / m.value("blob", fs::path(stem + ".bin").filename().string());
  std::ifstream bs(blob, std::ios::binary | std::ios::ate);
  if (!bs) throw Error(ErrorKind::io_failure, "cannot open checkpoint blob " + blob.string());
  const auto bytes = static_cast<std::size_t>(bs.tellg());
  if (bytes != ck.params.size() * 4)
    throw Error(ErrorKind::io_failure, blob.string() + ": " + std::to_string(bytes) + " bytes, expected " +
                                           std::to_string(ck.params.size() * 4));
  bs.seekg(0);
  io::read_f32s(bs, ck.params.data);
  if (!bs) throw Error(ErrorKind::io_failure, "short read from " + blob.string());
  if (!ck.params.all_finite()) throw Error(ErrorKind::non_finite, blob.string() + " holds non-finite weights");
  return ck;
}

}  // namespace smi::nn
