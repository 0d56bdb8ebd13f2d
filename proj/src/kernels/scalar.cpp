// Copyright (C) 2026 SMI contributors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>

#include "kernel_table.hpp"

namespace smi::kern {
namespace {

template <class T>
void gemm_naive(Trans ta, Trans tb, std::size_t m, std::size_t n,
                std::size_t k, const T* a, std::size_t lda, const T* b,
                std::size_t ldb, T* c, std::size_t ldc, bool accumulate) {
  const bool at = ta == Trans::yes;
  const bool bt = tb == Trans::yes;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      T acc = accumulate ? c[i * ldc + j] : T(0);
      for (std::size_t p = 0; p < k; ++p) {
        const T av = at ? a[p * lda + i] : a[i * lda + p];
        const T bv = bt ? b[j * ldb + p] : b[p * ldb + j];
        acc += av * bv;
      }
      c[i * ldc + j] = acc;
    }
  }
}

template <class T>
T sigmoid1(T x) {
  return x >= T(0) ? T(1) / (T(1) + std::exp(-x))
                   : std::exp(x) / (T(1) + std::exp(x));
}

template <class T>
T softplus1(T x) {
  return std::max(x, T(0)) + std::log1p(std::exp(-std::abs(x)));
}

template <class T>
void map_exp(T* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] = std::exp(x[i]);
}
template <class T>
void map_log(T* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] = std::log(x[i]);
}
template <class T>
void map_sigmoid(T* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] = sigmoid1(x[i]);
}
template <class T>
void map_tanh(T* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] = std::tanh(x[i]);
}
template <class T>
void map_softplus(T* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] = softplus1(x[i]);
}

void gemm_scalar(const detail::GemmArgs& g) {
  gemm_naive(g.ta, g.tb, g.m, g.n, g.k, g.a, g.lda, g.b, g.ldb, g.c, g.ldc,
             g.accumulate);
}

void adam_scalar(float* param, const float* grad, float* m, float* v,
                 std::size_t n, const AdamStep& s) {
  const float step = s.lr / s.bias1;
  const float root_b2 = std::sqrt(s.bias2);
  for (std::size_t i = 0; i < n; ++i) {
    const float g = grad[i];
    m[i] = s.beta1 * m[i] + (1.0f - s.beta1) * g;
    v[i] = s.beta2 * v[i] + (1.0f - s.beta2) * (g * g);
    param[i] -= step * m[i] / (std::sqrt(v[i]) / root_b2 + s.eps);
  }
}

constexpr detail::KernelTable kScalar{
    Isa::scalar,         gemm_scalar,         map_exp<float>,
    map_log<float>,      map_sigmoid<float>,  map_tanh<float>,
    map_softplus<float>, adam_scalar,
};

}  // namespace

namespace detail {
const KernelTable& scalar_table() noexcept { return kScalar; }
}  // namespace detail

namespace ref {
void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k,
          const float* a, std::size_t lda, const float* b, std::size_t ldb,
          float* c, std::size_t ldc, bool accumulate) {
  gemm_naive(ta, tb, m, n, k, a, lda, b, ldb, c, ldc, accumulate);
}
}  // namespace ref

void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k,
          const double* a, std::size_t lda, const double* b, std::size_t ldb,
          double* c, std::size_t ldc, bool accumulate) {
  gemm_naive(ta, tb, m, n, k, a, lda, b, ldb, c, ldc, accumulate);
}

void exp_inplace(double* x, std::size_t n) { map_exp(x, n); }
void log_inplace(double* x, std::size_t n) { map_log(x, n); }
void sigmoid_inplace(double* x, std::size_t n) { map_sigmoid(x, n); }
void tanh_inplace(double* x, std::size_t n) { map_tanh(x, n); }
void softplus_inplace(double* x, std::size_t n) { map_softplus(x, n); }

}  // namespace smi::kern
