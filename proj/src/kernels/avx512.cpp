// Copyright (C) 2026 SMI contributors
// SPDX-License-Identifier: Apache-2.0
//
// AVX-512F variants. Compiled with -mavx512f -mfma; entered only after a
// runtime CPU check.

#include <immintrin.h>

#define SMI_ISA_NS avx512_impl

#include "gemm_blocked.hpp"
#include "kernel_table.hpp"
#include "simd_math.hpp"

namespace smi::kern {
namespace {

struct V16 {
  using reg = __m512;
  static constexpr std::size_t width = 16;
  static reg load(const float* p) { return _mm512_loadu_ps(p); }
  static void store(float* p, reg x) { _mm512_storeu_ps(p, x); }
  static reg set1(float v) { return _mm512_set1_ps(v); }
  static reg add(reg a, reg b) { return _mm512_add_ps(a, b); }
  static reg sub(reg a, reg b) { return _mm512_sub_ps(a, b); }
  static reg mul(reg a, reg b) { return _mm512_mul_ps(a, b); }
  static reg div(reg a, reg b) { return _mm512_div_ps(a, b); }
  static reg min(reg a, reg b) { return _mm512_min_ps(a, b); }
  static reg max(reg a, reg b) { return _mm512_max_ps(a, b); }
  static reg sqrt(reg a) { return _mm512_sqrt_ps(a); }
  static reg fmadd(reg a, reg b, reg c) { return _mm512_fmadd_ps(a, b, c); }
  static reg fnmadd(reg a, reg b, reg c) { return _mm512_fnmadd_ps(a, b, c); }
  static reg round(reg a) {
    return _mm512_roundscale_ps(a, _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  }
  static reg abs(reg a) { return _mm512_abs_ps(a); }
  static reg copysign(reg mag, reg sign) {
    const __m512i sm = _mm512_set1_epi32(static_cast<int>(0x80000000u));
    const __m512i m = _mm512_andnot_si512(sm, _mm512_castps_si512(mag));
    const __m512i s = _mm512_and_si512(sm, _mm512_castps_si512(sign));
    return _mm512_castsi512_ps(_mm512_or_si512(m, s));
  }
  // Masks are carried as all-ones/all-zeros float lanes so simd_math.hpp
  // can stay ISA-agnostic.
  static reg lt_mask_f(reg a, reg b) {
    const __mmask16 k = _mm512_cmp_ps_mask(a, b, _CMP_LT_OQ);
    return _mm512_castsi512_ps(_mm512_maskz_set1_epi32(k, -1));
  }
  static reg select(reg mask, reg a, reg b) {
    const __mmask16 k = _mm512_test_epi32_mask(_mm512_castps_si512(mask),
                                               _mm512_castps_si512(mask));
    return _mm512_mask_blend_ps(k, b, a);
  }
  static reg scale2(reg y, reg n) { return _mm512_scalef_ps(y, n); }
  static reg frexp(reg x, reg& e) {
    e = _mm512_add_ps(_mm512_getexp_ps(x), _mm512_set1_ps(1.0f));
    return _mm512_getmant_ps(x, _MM_MANT_NORM_p5_1, _MM_MANT_SIGN_src);
  }
};

struct Micro12x32 {
  static constexpr std::size_t mr = 12, nr = 32, mc = 144;
  static void run(std::size_t kc, const float* a, const float* b, float* c,
                  std::size_t ldc, bool load_c) {
    __m512 acc[12][2];
#pragma GCC unroll 12
    for (int r = 0; r < 12; ++r) {
      acc[r][0] = _mm512_setzero_ps();
      acc[r][1] = _mm512_setzero_ps();
    }
    for (std::size_t p = 0; p < kc; ++p) {
      const __m512 b0 = _mm512_load_ps(b);
      const __m512 b1 = _mm512_load_ps(b + 16);
#pragma GCC unroll 12
      for (int r = 0; r < 12; ++r) {
        const __m512 av = _mm512_set1_ps(a[r]);
        acc[r][0] = _mm512_fmadd_ps(av, b0, acc[r][0]);
        acc[r][1] = _mm512_fmadd_ps(av, b1, acc[r][1]);
      }
      a += 12;
      b += 32;
    }
#pragma GCC unroll 12
    for (int r = 0; r < 12; ++r) {
      float* row = c + r * ldc;
      __m512 lo = acc[r][0], hi = acc[r][1];
      if (load_c) {
        lo = _mm512_add_ps(_mm512_loadu_ps(row), lo);
        hi = _mm512_add_ps(_mm512_loadu_ps(row + 16), hi);
      }
      _mm512_storeu_ps(row, lo);
      _mm512_storeu_ps(row + 16, hi);
    }
  }
};

void gemm_avx512(const detail::GemmArgs& g) { SMI_ISA_NS::blocked::gemm<Micro12x32>(g); }

constexpr detail::KernelTable kAvx512{
    Isa::avx512,
    gemm_avx512,
    simd::exp_map<V16>,
    simd::log_map<V16>,
    simd::sigmoid_map<V16>,
    simd::tanh_map<V16>,
    simd::softplus_map<V16>,
    simd::adam_v<V16>,
};

}  // namespace

namespace detail {
const KernelTable* avx512_table() noexcept { return &kAvx512; }
}  // namespace detail

}  // namespace smi::kern
