// Copyright (C) 2026 SMI contributors
// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "kernel_table.hpp"

namespace smi::kern {
namespace {

const detail::KernelTable* table_for(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar:
      return &detail::scalar_table();
    case Isa::avx2:
      return detail::avx2_table();
    case Isa::avx512:
      return detail::avx512_table();
  }
  return nullptr;
}

Isa initial_isa() noexcept {
  if (const char* env = std::getenv("SMI_ISA")) {
    const std::string want(env);
    for (Isa isa : {Isa::scalar, Isa::avx2, Isa::avx512})
      if (want == isa_name(isa) && isa_supported(isa)) return isa;
  }
  return best_supported_isa();
}

std::atomic<const detail::KernelTable*>& active() noexcept {
  static std::atomic<const detail::KernelTable*> t{table_for(initial_isa())};
  return t;
}

std::atomic<int> g_threads{1};

const detail::KernelTable& tab() noexcept {
  return *active().load(std::memory_order_relaxed);
}

}  // namespace

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
    case Isa::avx512:
      return "avx512";
  }
  return "unknown";
}

bool isa_supported(Isa isa) noexcept {
  if (table_for(isa) == nullptr) return false;
#if defined(__x86_64__) || defined(__i386__)
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    case Isa::avx512:
      return __builtin_cpu_supports("avx512f") && __builtin_cpu_supports("fma");
  }
  return false;
#else
  return isa == Isa::scalar;
#endif
}

Isa best_supported_isa() noexcept {
  if (isa_supported(Isa::avx512)) return Isa::avx512;
  if (isa_supported(Isa::avx2)) return Isa::avx2;
  return Isa::scalar;
}

Isa active_isa() noexcept { return tab().isa; }

void set_active_isa(Isa isa) {
  if (!isa_supported(isa))
    throw std::invalid_argument("ISA not supported on this CPU: " +
                                std::string(isa_name(isa)));
  active().store(table_for(isa), std::memory_order_relaxed);
}

void set_num_threads(int n) noexcept { g_threads.store(n < 1 ? 1 : n); }
int num_threads() noexcept { return g_threads.load(); }

void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k,
          const float* a, std::size_t lda, const float* b, std::size_t ldb,
          float* c, std::size_t ldc, bool accumulate) {
  tab().gemm({ta, tb, m, n, k, a, lda, b, ldb, c, ldc, accumulate,
              g_threads.load(std::memory_order_relaxed)});
}

void exp_inplace(float* x, std::size_t n) { tab().exp(x, n); }
void log_inplace(float* x, std::size_t n) { tab().log(x, n); }
void sigmoid_inplace(float* x, std::size_t n) { tab().sigmoid(x, n); }
void tanh_inplace(float* x, std::size_t n) { tab().tanh(x, n); }
void softplus_inplace(float* x, std::size_t n) { tab().softplus(x, n); }

void adam_update(float* param, const float* grad, float* m, float* v,
                 std::size_t n, const AdamStep& s) {
  tab().adam(param, grad, m, v, n, s);
}

}  // namespace smi::kern
