// Copyright (C) 2026 SMI contributors
// SPDX-License-Identifier: Apache-2.0

#include "kernel_table.hpp"

namespace smi::kern::detail {
const KernelTable* avx512_table() noexcept { return nullptr; }
}  // namespace smi::kern::detail
