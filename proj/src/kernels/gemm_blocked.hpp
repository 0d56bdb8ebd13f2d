// Copyright (C) 2026 SMI contributors
// SPDX-License-Identifier: Apache-2.0
//
// Cache-blocked GEMM driver (Goto/BLIS loop order) parameterized by a
// register-tile micro-kernel `K` providing:
//   static constexpr std::size_t mr, nr;
//   static void run(std::size_t kc, const float* a, const float* b,
//                   float* c, std::size_t ldc, bool load_c);
// `a` is an mr-row sliver packed k-major, `b` an nr-column sliver packed
// k-major. Each output element is produced by exactly one thread with a
// fixed summation order, so results do not depend on the thread count.
//
// Include only from a translation unit compiled for the matching ISA.

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstring>
#include <vector>

#include "kernel_table.hpp"

#ifndef SMI_ISA_NS
#error "define SMI_ISA_NS before including gemm_blocked.hpp"
#endif

// Every ISA translation unit gets its own copy; inline functions compiled
// with different target flags must not be merged by the linker.
namespace smi::kern::SMI_ISA_NS::blocked {

inline constexpr std::size_t kKc = 256;

template <class T>
struct AlignedBuffer {
  T* data = nullptr;
  std::size_t size = 0;
  void reserve(std::size_t n) {
    if (n <= size) return;
    ::operator delete[](data, std::align_val_t{64});
    data = static_cast<T*>(::operator new[](n * sizeof(T), std::align_val_t{64}));
    size = n;
  }
  ~AlignedBuffer() { ::operator delete[](data, std::align_val_t{64}); }
};

inline float elem_a(const detail::GemmArgs& g, std::size_t i, std::size_t p) {
  return g.ta == Trans::yes ? g.a[p * g.lda + i] : g.a[i * g.lda + p];
}

template <std::size_t MR>
void pack_a(const detail::GemmArgs& g, std::size_t i0, std::size_t mc,
            std::size_t p0, std::size_t kc, float* out) {
  for (std::size_t ir = 0; ir < mc; ir += MR) {
    const std::size_t rows = std::min(MR, mc - ir);
    float* dst = out + ir * kc;
    if (g.ta == Trans::yes) {
      for (std::size_t p = 0; p < kc; ++p) {
        const float* src = g.a + (p0 + p) * g.lda + i0 + ir;
        std::size_t r = 0;
        for (; r < rows; ++r) dst[p * MR + r] = src[r];
        for (; r < MR; ++r) dst[p * MR + r] = 0.0f;
      }
    } else {
      for (std::size_t r = 0; r < MR; ++r) {
        if (r < rows) {
          const float* src = g.a + (i0 + ir + r) * g.lda + p0;
          for (std::size_t p = 0; p < kc; ++p) dst[p * MR + r] = src[p];
        } else {
          for (std::size_t p = 0; p < kc; ++p) dst[p * MR + r] = 0.0f;
        }
      }
    }
  }
}

template <std::size_t NR>
void pack_b(const detail::GemmArgs& g, std::size_t j0, std::size_t nc,
            std::size_t p0, std::size_t kc, float* out) {
  for (std::size_t jr = 0; jr < nc; jr += NR) {
    const std::size_t cols = std::min(NR, nc - jr);
    float* dst = out + jr * kc;
    if (g.tb == Trans::yes) {
      for (std::size_t c = 0; c < NR; ++c) {
        if (c < cols) {
          const float* src = g.b + (j0 + jr + c) * g.ldb + p0;
          for (std::size_t p = 0; p < kc; ++p) dst[p * NR + c] = src[p];
        } else {
          for (std::size_t p = 0; p < kc; ++p) dst[p * NR + c] = 0.0f;
        }
      }
    } else {
      for (std::size_t p = 0; p < kc; ++p) {
        const float* src = g.b + (p0 + p) * g.ldb + j0 + jr;
        std::size_t c = 0;
        for (; c < cols; ++c) dst[p * NR + c] = src[c];
        for (; c < NR; ++c) dst[p * NR + c] = 0.0f;
      }
    }
  }
}

// Small-m path (single-frame inference): row-by-row axpy over contiguous
// rows of B, no packing.
inline void gemm_small_m(const detail::GemmArgs& g) {
  for (std::size_t i = 0; i < g.m; ++i) {
    float* crow = g.c + i * g.ldc;
    if (!g.accumulate)
      for (std::size_t j = 0; j < g.n; ++j) crow[j] = 0.0f;
    if (g.tb == Trans::no) {
      for (std::size_t p = 0; p < g.k; ++p) {
        const float av = elem_a(g, i, p);
        const float* brow = g.b + p * g.ldb;
        for (std::size_t j = 0; j < g.n; ++j) crow[j] += av * brow[j];
      }
    } else {
      for (std::size_t j = 0; j < g.n; ++j) {
        const float* brow = g.b + j * g.ldb;
        float acc = 0.0f;
        for (std::size_t p = 0; p < g.k; ++p) acc += elem_a(g, i, p) * brow[p];
        crow[j] += acc;
      }
    }
  }
}

template <class K>
void gemm(const detail::GemmArgs& g) {
  constexpr std::size_t mr = K::mr, nr = K::nr;
  constexpr std::size_t mc_blk = K::mc, nc_blk = 4096 / nr * nr;
  if (g.m == 0 || g.n == 0) return;
  if (g.k == 0) {
    if (!g.accumulate)
      for (std::size_t i = 0; i < g.m; ++i)
        for (std::size_t j = 0; j < g.n; ++j) g.c[i * g.ldc + j] = 0.0f;
    return;
  }
  if (g.m < 4 && g.tb == Trans::no) {
    gemm_small_m(g);
    return;
  }

  static thread_local AlignedBuffer<float> bpack;
  bpack.reserve(kKc * nc_blk);

  for (std::size_t jc = 0; jc < g.n; jc += nc_blk) {
    const std::size_t nc = std::min(nc_blk, g.n - jc);
    const std::size_t nc_pad = (nc + nr - 1) / nr * nr;
    for (std::size_t pc = 0; pc < g.k; pc += kKc) {
      const std::size_t kc = std::min(kKc, g.k - pc);
      const bool load_c = g.accumulate || pc > 0;
      pack_b<nr>(g, jc, nc, pc, kc, bpack.data);
      const float* bp = bpack.data;
      const long n_blocks = static_cast<long>((g.m + mc_blk - 1) / mc_blk);
#if defined(_OPENMP)
#pragma omp parallel for schedule(static) if (g.threads > 1 && n_blocks > 1) num_threads(g.threads)
#endif
      for (long blk = 0; blk < n_blocks; ++blk) {
        static thread_local AlignedBuffer<float> apack;
        apack.reserve(mc_blk * kKc);
        const std::size_t ic = static_cast<std::size_t>(blk) * mc_blk;
        const std::size_t mc = std::min(mc_blk, g.m - ic);
        pack_a<mr>(g, ic, mc, pc, kc, apack.data);
        alignas(64) float tile[mr * nr];
        for (std::size_t jr = 0; jr < nc_pad; jr += nr) {
          const std::size_t cols = std::min(nr, nc - jr);
          for (std::size_t ir = 0; ir < mc; ir += mr) {
            const std::size_t rows = std::min(mr, mc - ir);
            float* cptr = g.c + (ic + ir) * g.ldc + jc + jr;
            const float* ap = apack.data + ir * kc;
            const float* bsl = bp + jr * kc;
            if (rows == mr && cols == nr) {
              K::run(kc, ap, bsl, cptr, g.ldc, load_c);
            } else {
              K::run(kc, ap, bsl, tile, nr, false);
              for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t c = 0; c < cols; ++c)
                  cptr[r * g.ldc + c] =
                      load_c ? cptr[r * g.ldc + c] + tile[r * nr + c] : tile[r * nr + c];
            }
          }
        }
      }
    }
  }
}

}  // namespace smi::kern::SMI_ISA_NS::blocked
