// Copyright (C) 2026 SMI contributors
// SPDX-License-Identifier: Apache-2.0
//
// Elementwise algorithms written once against a vector-register policy `V`
// (see avx2.cpp / avx512.cpp). Polynomials are the Cephes single-precision
// ones; absolute error is a few ulp over the ranges the network produces.
//
// Include only from a translation unit compiled for the matching ISA.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstring>

#include "smi/kernels/kernels.hpp"

namespace smi::kern::simd {

template <class V>
inline typename V::reg exp_v(typename V::reg x) {
  using R = typename V::reg;
  x = V::min(V::max(x, V::set1(-87.3f)), V::set1(88.3f));
  const R n = V::round(V::mul(x, V::set1(1.44269504088896341f)));
  R r = V::fnmadd(n, V::set1(0.693359375f), x);
  r = V::fnmadd(n, V::set1(-2.12194440e-4f), r);
  R y = V::set1(1.9875691500e-4f);
  y = V::fmadd(y, r, V::set1(1.3981999507e-3f));
  y = V::fmadd(y, r, V::set1(8.3334519073e-3f));
  y = V::fmadd(y, r, V::set1(4.1665795894e-2f));
  y = V::fmadd(y, r, V::set1(1.6666665459e-1f));
  y = V::fmadd(y, r, V::set1(5.0000001201e-1f));
  y = V::fmadd(y, V::mul(r, r), V::add(r, V::set1(1.0f)));
  return V::scale2(y, n);
}

template <class V>
inline typename V::reg log_v(typename V::reg x) {
  using R = typename V::reg;
  x = V::max(x, V::set1(1.17549435e-38f));
  R e;
  R m = V::frexp(x, e);
  const R lt = V::lt_mask_f(m, V::set1(0.707106781186547524f));
  e = V::select(lt, V::sub(e, V::set1(1.0f)), e);
  m = V::sub(V::select(lt, V::add(m, m), m), V::set1(1.0f));
  const R z = V::mul(m, m);
  R y = V::set1(7.0376836292e-2f);
  y = V::fmadd(y, m, V::set1(-1.1514610310e-1f));
  y = V::fmadd(y, m, V::set1(1.1676998740e-1f));
  y = V::fmadd(y, m, V::set1(-1.2420140846e-1f));
  y = V::fmadd(y, m, V::set1(1.4249322787e-1f));
  y = V::fmadd(y, m, V::set1(-1.6668057665e-1f));
  y = V::fmadd(y, m, V::set1(2.0000714765e-1f));
  y = V::fmadd(y, m, V::set1(-2.4999993993e-1f));
  y = V::fmadd(y, m, V::set1(3.3333331174e-1f));
  y = V::mul(V::mul(y, m), z);
  y = V::fmadd(e, V::set1(-2.12194440e-4f), y);
  y = V::fnmadd(V::set1(0.5f), z, y);
  R r = V::add(m, y);
  return V::fmadd(e, V::set1(0.693359375f), r);
}

template <class V>
inline typename V::reg sigmoid_v(typename V::reg x) {
  const auto one = V::set1(1.0f);
  return V::div(one, V::add(one, exp_v<V>(V::sub(V::set1(0.0f), x))));
}

// tanh(x) = sign(x) * (1 - 2 / (exp(2|x|) + 1)), with an odd Taylor
// polynomial near zero where the subtraction would cancel.
template <class V>
inline typename V::reg tanh_v(typename V::reg x) {
  using R = typename V::reg;
  const R ax = V::abs(x);
  const R e2 = exp_v<V>(V::add(ax, ax));
  R big = V::sub(V::set1(1.0f), V::div(V::set1(2.0f), V::add(e2, V::set1(1.0f))));
  const R x2 = V::mul(ax, ax);
  R small = V::set1(-17.0f / 315.0f);
  small = V::fmadd(small, x2, V::set1(2.0f / 15.0f));
  small = V::fmadd(small, x2, V::set1(-1.0f / 3.0f));
  small = V::fmadd(V::mul(small, x2), ax, ax);
  const R r = V::select(V::lt_mask_f(ax, V::set1(0.0625f)), small, big);
  return V::copysign(r, x);
}

template <class V>
inline typename V::reg softplus_v(typename V::reg x) {
  const auto one = V::set1(1.0f);
  const auto t = exp_v<V>(V::sub(V::set1(0.0f), V::abs(x)));
  // log1p(t) = log(w) * t / (w - 1) with w = 1 + t; exact when w rounds to 1.
  const auto w = V::add(one, t);
  const auto d = V::sub(w, one);
  const auto l = V::div(V::mul(log_v<V>(w), t), d);
  const auto lp = V::select(V::lt_mask_f(d, V::set1(1e-30f)), t, l);
  return V::add(V::max(x, V::set1(0.0f)), lp);
}

// Applies `f` over x[0..n); the tail goes through a padded register so
// every element sees the same arithmetic.
template <class V, class F>
inline void map_v(float* x, std::size_t n, F f) {
  constexpr std::size_t w = V::width;
  std::size_t i = 0;
  for (; i + w <= n; i += w) V::store(x + i, f(V::load(x + i)));
  if (i < n) {
    alignas(64) float tail[w] = {};
    std::memcpy(tail, x + i, (n - i) * sizeof(float));
    V::store(tail, f(V::load(tail)));
    std::memcpy(x + i, tail, (n - i) * sizeof(float));
  }
}

template <class V>
void exp_map(float* x, std::size_t n) {
  map_v<V>(x, n, [](auto r) { return exp_v<V>(r); });
}
template <class V>
void log_map(float* x, std::size_t n) {
  map_v<V>(x, n, [](auto r) { return log_v<V>(r); });
}
template <class V>
void sigmoid_map(float* x, std::size_t n) {
  map_v<V>(x, n, [](auto r) { return sigmoid_v<V>(r); });
}
template <class V>
void tanh_map(float* x, std::size_t n) {
  map_v<V>(x, n, [](auto r) { return tanh_v<V>(r); });
}
template <class V>
void softplus_map(float* x, std::size_t n) {
  map_v<V>(x, n, [](auto r) { return softplus_v<V>(r); });
}

template <class V>
void adam_v(float* param, const float* grad, float* m, float* v, std::size_t n,
            const AdamStep& s) {
  constexpr std::size_t w = V::width;
  const float step = s.lr / s.bias1;
  const float root_b2 = std::sqrt(s.bias2);
  const auto b1 = V::set1(s.beta1), c1 = V::set1(1.0f - s.beta1);
  const auto b2 = V::set1(s.beta2), c2 = V::set1(1.0f - s.beta2);
  const auto vstep = V::set1(step), vroot = V::set1(root_b2);
  const auto veps = V::set1(s.eps);
  std::size_t i = 0;
  for (; i + w <= n; i += w) {
    const auto g = V::load(grad + i);
    const auto mi = V::add(V::mul(b1, V::load(m + i)), V::mul(c1, g));
    const auto vi = V::add(V::mul(b2, V::load(v + i)), V::mul(c2, V::mul(g, g)));
    V::store(m + i, mi);
    V::store(v + i, vi);
    const auto denom = V::add(V::div(V::sqrt(vi), vroot), veps);
    const auto upd = V::div(V::mul(vstep, mi), denom);
    V::store(param + i, V::sub(V::load(param + i), upd));
  }
  for (; i < n; ++i) {
    const float g = grad[i];
    m[i] = s.beta1 * m[i] + (1.0f - s.beta1) * g;
    v[i] = s.beta2 * v[i] + (1.0f - s.beta2) * (g * g);
    param[i] -= step * m[i] / (std::sqrt(v[i]) / root_b2 + s.eps);
  }
}

}  // namespace smi::kern::simd
