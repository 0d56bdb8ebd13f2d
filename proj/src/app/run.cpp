// Copyright (C) 2026 SMI contributors
// SPDX-License-Identifier: Apache-2.0

#include "smi/app/run.hpp"

#include <cctype>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>

#include "smi/common/binary_io.hpp"

namespace smi::app {

std::string config_hash(const nlohmann::json& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

namespace {

void override_level(nlohmann::json& obj, const std::string& env_prefix, const EnvLookup& lookup,
                    std::vector<std::string>& applied) {
  for (auto& [key, value] : obj.items()) {
    std::string name = env_prefix;
    for (char c : key) name += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (value.is_object()) {
      override_level(value, name + "__", lookup, applied);
      continue;
    }
    const char* raw = lookup(name.c_str());
    if (raw == nullptr) continue;
    auto parsed = nlohmann::json::parse(raw, nullptr, false);
    value = parsed.is_discarded() ? nlohmann::json(raw) : parsed;
    applied.push_back(name);
  }
}

}  // namespace

std::vector<std::string> apply_env_overrides(nlohmann::json& config, std::string_view prefix,
                                             const EnvLookup& lookup) {
  std::vector<std::string> applied;
  if (!config.is_object()) return applied;
  const EnvLookup get = lookup ? lookup : EnvLookup([](const char* n) { return std::getenv(n); });
  override_level(config, std::string(prefix), get, applied);
  return applied;
}

nlohmann::json RunManifest::to_json() const {
  nlohmann::json hashes = nlohmann::json::object();
  for (const auto& [name, cfg] : configs.items()) hashes[name] = config_hash(cfg);
  return {{"tool", "smi"},
          {"tool_version", kToolVersion},
          {"command", command},
          {"configs", configs},
          {"config_hashes", hashes},
          {"seed", seed},
          {"started", started},
          {"finished", finished},
          {"outputs", outputs},
          {"extra", extra}};
}

void RunManifest::write(const std::string& path) {
  if (finished.empty()) finished = utc_timestamp();
  const std::string text = to_json().dump(2) + "\n";
  io::write_atomically(path, [&](std::ostream& os) { os << text; });
}

}  // namespace smi::app
