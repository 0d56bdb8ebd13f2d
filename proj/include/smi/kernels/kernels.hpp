// Copyright (C) 2026 SMI contributors
// SPDX-License-Identifier: Apache-2.0
//
// Data-parallel arithmetic used by the network. Every float kernel has a
// portable scalar reference and optional AVX2/FMA and AVX-512 variants; the
// variant is chosen once at startup from CPU features (override with the
// SMI_ISA environment variable) and can be switched by tests. Double
// precision always runs the reference path.

#pragma once

#include <cstddef>
#include <string_view>

namespace smi::kern {

enum class Isa : int { scalar = 0, avx2 = 1, avx512 = 2 };

std::string_view isa_name(Isa isa) noexcept;
bool isa_supported(Isa isa) noexcept;
Isa best_supported_isa() noexcept;

Isa active_isa() noexcept;
/// Throws std::invalid_argument if the CPU cannot run `isa`.
void set_active_isa(Isa isa);

/// Worker threads used inside large GEMMs (no effect without OpenMP).
void set_num_threads(int n) noexcept;
int num_threads() noexcept;

enum class Trans : bool { no = false, yes = true };

// C[m x n] = op(A)[m x k] * op(B)[k x n]  (+ C when accumulate).
// Row-major; op(A)(i,p) = A[i*lda+p] or A[p*lda+i] when transposed.
void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k,
          const float* a, std::size_t lda, const float* b, std::size_t ldb,
          float* c, std::size_t ldc, bool accumulate);
void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k,
          const double* a, std::size_t lda, const double* b, std::size_t ldb,
          double* c, std::size_t ldc, bool accumulate);

// In-place elementwise maps.
void exp_inplace(float* x, std::size_t n);
void log_inplace(float* x, std::size_t n);
void sigmoid_inplace(float* x, std::size_t n);
void tanh_inplace(float* x, std::size_t n);
void softplus_inplace(float* x, std::size_t n);
void exp_inplace(double* x, std::size_t n);
void log_inplace(double* x, std::size_t n);
void sigmoid_inplace(double* x, std::size_t n);
void tanh_inplace(double* x, std::size_t n);
void softplus_inplace(double* x, std::size_t n);

struct AdamStep {
  float lr;
  float beta1;
  float beta2;
  float eps;
  float bias1;  // 1 - beta1^t
  float bias2;  // 1 - beta2^t
};

// Bias-corrected adaptive-moment update over n parameters.
void adam_update(float* param, const float* grad, float* m, float* v,
                 std::size_t n, const AdamStep& s);

// Reference implementations, callable directly for equivalence tests.
namespace ref {
void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k,
          const float* a, std::size_t lda, const float* b, std::size_t ldb,
          float* c, std::size_t ldc, bool accumulate);
}  // namespace ref

}  // namespace smi::kern
