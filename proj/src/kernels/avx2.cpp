// Copyright (C) 2026 SMI contributors
// SPDX-License-Identifier: Apache-2.0
//
// AVX2 + FMA variants. This file is compiled with -mavx2 -mfma and only
// entered after a runtime CPU check.

#include <immintrin.h>

#define SMI_ISA_NS avx2_impl

#include "gemm_blocked.hpp"
#include "kernel_table.hpp"
#include "simd_math.hpp"

namespace smi::kern {
namespace {

struct V8 {
  using reg = __m256;
  static constexpr std::size_t width = 8;
  static reg load(const float* p) { return _mm256_loadu_ps(p); }
  static void store(float* p, reg x) { _mm256_storeu_ps(p, x); }
  static reg set1(float v) { return _mm256_set1_ps(v); }
  static reg add(reg a, reg b) { return _mm256_add_ps(a, b); }
  static reg sub(reg a, reg b) { return _mm256_sub_ps(a, b); }
  static reg mul(reg a, reg b) { return _mm256_mul_ps(a, b); }
  static reg div(reg a, reg b) { return _mm256_div_ps(a, b); }
  static reg min(reg a, reg b) { return _mm256_min_ps(a, b); }
  static reg max(reg a, reg b) { return _mm256_max_ps(a, b); }
  static reg sqrt(reg a) { return _mm256_sqrt_ps(a); }
  static reg fmadd(reg a, reg b, reg c) { return _mm256_fmadd_ps(a, b, c); }
  static reg fnmadd(reg a, reg b, reg c) { return _mm256_fnmadd_ps(a, b, c); }
  static reg round(reg a) {
    return _mm256_round_ps(a, _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  }
  static reg abs(reg a) {
    return _mm256_andnot_ps(_mm256_set1_ps(-0.0f), a);
  }
  static reg copysign(reg mag, reg sign) {
    const reg sm = _mm256_set1_ps(-0.0f);
    return _mm256_or_ps(_mm256_andnot_ps(sm, mag), _mm256_and_ps(sm, sign));
  }
  static reg lt_mask_f(reg a, reg b) { return _mm256_cmp_ps(a, b, _CMP_LT_OQ); }
  static reg select(reg mask, reg a, reg b) { return _mm256_blendv_ps(b, a, mask); }
  // y * 2^n for integral-valued n within the normal exponent range.
  static reg scale2(reg y, reg n) {
    __m256i e = _mm256_add_epi32(_mm256_cvtps_epi32(n), _mm256_set1_epi32(127));
    e = _mm256_slli_epi32(e, 23);
    return _mm256_mul_ps(y, _mm256_castsi256_ps(e));
  }
  // x = m * 2^e with m in [0.5, 1), x positive normal.
  static reg frexp(reg x, reg& e) {
    const __m256i bits = _mm256_castps_si256(x);
    const __m256i ei = _mm256_sub_epi32(_mm256_srli_epi32(bits, 23), _mm256_set1_epi32(126));
    e = _mm256_cvtepi32_ps(ei);
    const __m256i mant = _mm256_or_si256(
        _mm256_and_si256(bits, _mm256_set1_epi32(0x007FFFFF)), _mm256_set1_epi32(0x3F000000));
    return _mm256_castsi256_ps(mant);
  }
};

struct Micro6x16 {
  static constexpr std::size_t mr = 6, nr = 16, mc = 96;
  static void run(std::size_t kc, const float* a, const float* b, float* c,
                  std::size_t ldc, bool load_c) {
    __m256 c00 = _mm256_setzero_ps(), c01 = _mm256_setzero_ps();
    __m256 c10 = _mm256_setzero_ps(), c11 = _mm256_setzero_ps();
    __m256 c20 = _mm256_setzero_ps(), c21 = _mm256_setzero_ps();
    __m256 c30 = _mm256_setzero_ps(), c31 = _mm256_setzero_ps();
    __m256 c40 = _mm256_setzero_ps(), c41 = _mm256_setzero_ps();
    __m256 c50 = _mm256_setzero_ps(), c51 = _mm256_setzero_ps();
    for (std::size_t p = 0; p < kc; ++p) {
      const __m256 b0 = _mm256_load_ps(b);
      const __m256 b1 = _mm256_load_ps(b + 8);
      __m256 av = _mm256_broadcast_ss(a + 0);
      c00 = _mm256_fmadd_ps(av, b0, c00);
      c01 = _mm256_fmadd_ps(av, b1, c01);
      av = _mm256_broadcast_ss(a + 1);
      c10 = _mm256_fmadd_ps(av, b0, c10);
      c11 = _mm256_fmadd_ps(av, b1, c11);
      av = _mm256_broadcast_ss(a + 2);
      c20 = _mm256_fmadd_ps(av, b0, c20);
      c21 = _mm256_fmadd_ps(av, b1, c21);
      av = _mm256_broadcast_ss(a + 3);
      c30 = _mm256_fmadd_ps(av, b0, c30);
      c31 = _mm256_fmadd_ps(av, b1, c31);
      av = _mm256_broadcast_ss(a + 4);
      c40 = _mm256_fmadd_ps(av, b0, c40);
      c41 = _mm256_fmadd_ps(av, b1, c41);
      av = _mm256_broadcast_ss(a + 5);
      c50 = _mm256_fmadd_ps(av, b0, c50);
      c51 = _mm256_fmadd_ps(av, b1, c51);
      a += 6;
      b += 16;
    }
    const __m256 acc[12] = {c00, c01, c10, c11, c20, c21, c30, c31, c40, c41, c50, c51};
    for (std::size_t r = 0; r < 6; ++r) {
      float* row = c + r * ldc;
      __m256 lo = acc[2 * r], hi = acc[2 * r + 1];
      if (load_c) {
        lo = _mm256_add_ps(_mm256_loadu_ps(row), lo);
        hi = _mm256_add_ps(_mm256_loadu_ps(row + 8), hi);
      }
      _mm256_storeu_ps(row, lo);
      _mm256_storeu_ps(row + 8, hi);
    }
  }
};

void gemm_avx2(const detail::GemmArgs& g) { SMI_ISA_NS::blocked::gemm<Micro6x16>(g); }

constexpr detail::KernelTable kAvx2{
    Isa::avx2,
    gemm_avx2,
    simd::exp_map<V8>,
    simd::log_map<V8>,
    simd::sigmoid_map<V8>,
    simd::tanh_map<V8>,
    simd::softplus_map<V8>,
    simd::adam_v<V8>,
};

}  // namespace

namespace detail {
const KernelTable* avx2_table() noexcept { return &kAvx2; }
}  // namespace detail

}  // namespace smi::kern
