// Copyright (C) 2026 SMI contributors
// SPDX-License-Identifier: Apache-2.0
//
// Plumbing shared by the command-line subcommands: run manifests, config
// hashing and environment overrides.

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace smi::app {

inline constexpr std::string_view kToolVersion = "0.1.0";
inline constexpr std::string_view kManifestName = "run_manifest.json";

/// 64-bit FNV-1a of the compact JSON dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& config);

/// UTC, second resolution, "YYYY-MM-DDTHH:MM:SSZ".
std::string utc_timestamp();

using EnvLookup = std::function<const char*(const char*)>;

/// For every key of `config` (nested objects joined with "__"), an
/// environment variable PREFIX + upper-cased key replaces the value. The
/// variable is parsed as JSON, falling back to a plain string. Returns the
/// names that were applied.
std::vector<std::string> apply_env_overrides(nlohmann::json& config, std::string_view prefix = "SMI_",
                                             const EnvLookup& lookup = {});

struct RunManifest {
  std::vector<std::string> command;
  nlohmann::json configs = nlohmann::json::object();  // name -> config echo
  std::uint64_t seed = 0;
  std::string started;
  std::string finished;
  nlohmann::json outputs = nlohmann::json::object();  // name -> path
  nlohmann::json extra = nlohmann::json::object();

  nlohmann::json to_json() const;
  /// Writes atomically; finished is stamped if empty.
  void write(const std::string& path);
};

}  // namespace smi::app
