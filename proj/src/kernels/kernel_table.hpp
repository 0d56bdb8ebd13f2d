// Copyright (C) 2026 SMI contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>

#include "smi/kernels/kernels.hpp"

namespace smi::kern::detail {

struct GemmArgs {
  Trans ta;
  Trans tb;
  std::size_t m, n, k;
  const float* a;
  std::size_t lda;
  const float* b;
  std::size_t ldb;
  float* c;
  std::size_t ldc;
  bool accumulate;
  int threads;
};

using MapFn = void (*)(float*, std::size_t);

struct KernelTable {
  Isa isa;
  void (*gemm)(const GemmArgs&);
  MapFn exp;
  MapFn log;
  MapFn sigmoid;
  MapFn tanh;
  MapFn softplus;
  void (*adam)(float*, const float*, float*, float*, std::size_t,
               const AdamStep&);
};

const KernelTable& scalar_table() noexcept;
// Null when the variant was not compiled in.
const KernelTable* avx2_table() noexcept;
const KernelTable* avx512_table() noexcept;

}  // namespace smi::kern::detail
