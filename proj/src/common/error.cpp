// Copyright (C) 2026 SMI contributors
// SPDX-License-Identifier: Apache-2.0

#include "smi/common/error.hpp"

namespace smi {

std::string_view error_kind_name(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::out_of_range: return "OutOfRange";
    case ErrorKind::dimension_mismatch: return "DimensionMismatch";
    case ErrorKind::all_masked: return "AllMasked";
    case ErrorKind::budget_violation: return "BudgetViolation";
    case ErrorKind::non_finite: return "NonFinite";
    case ErrorKind::too_small: return "TooSmall";
    case ErrorKind::config_invalid: return "ConfigInvalid";
    case ErrorKind::io_failure: return "IoFailure";
    case ErrorKind::stale_model: return "StaleModel";
    case ErrorKind::protocol_violation: return "ProtocolViolation";
    case ErrorKind::bind_failure: return "BindFailure";
    case ErrorKind::interrupted: return "Interrupted";
  }
  return "Unknown";
}

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::io_failure:
    case ErrorKind::stale_model: return kExitIo;
    case ErrorKind::non_finite: return kExitNumeric;
    case ErrorKind::protocol_violation:
    case ErrorKind::bind_failure: return kExitProtocol;
    case ErrorKind::interrupted: return kExitInterrupted;
    default: return kExitConfig;
  }
}

}  // namespace smi
