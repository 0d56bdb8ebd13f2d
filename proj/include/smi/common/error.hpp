// Copyright (C) 2026 SMI contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace smi {

enum class ErrorKind {
  out_of_range,
  dimension_mismatch,
  all_masked,
  budget_violation,
  non_finite,
  too_small,
  config_invalid,
  io_failure,
  stale_model,
  protocol_violation,
  bind_failure,
  interrupted,
};

std::string_view error_kind_name(ErrorKind kind) noexcept;

// Process exit codes used by the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitNumeric = 4;
inline constexpr int kExitProtocol = 5;
inline constexpr int kExitInterrupted = 130;

int exit_code(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(error_kind_name(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace smi
