// Copyright (C) 2026 SMI contributors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <vector>

#include "doctest.h"
#include "smi/kernels/kernels.hpp"
#include "test_util.hpp"

using namespace smi;
using kern::Isa;
using kern::Trans;

namespace {

std::vector<Isa> available_isas() {
  std::vector<Isa> out;
  for (Isa i : {Isa::scalar, Isa::avx2, Isa::avx512})
    if (kern::isa_supported(i)) out.push_back(i);
  return out;
}

struct IsaGuard {
  Isa saved = kern::active_isa();
  ~IsaGuard() { kern::set_active_isa(saved); }
};

// C = op(A) op(B) (+ C) accumulated in double.
std::vector<double> oracle_gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k,
                                const std::vector<float>& a, std::size_t lda, const std::vector<float>& b,
                                std::size_t ldb, const std::vector<float>& c, std::size_t ldc, bool acc) {
  std::vector<double> out(m * ldc);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = acc ? c[i * ldc + j] : 0.0;
      for (std::size_t p = 0; p < k; ++p) {
        const double av = ta == Trans::no ? a[i * lda + p] : a[p * lda + i];
        const double bv = tb == Trans::no ? b[p * ldb + j] : b[j * ldb + p];
        s += av * bv;
      }
      out[i * ldc + j] = s;
    }
  return out;
}

}  // namespace

TEST_CASE("gemm variants agree with a double-precision oracle") {
  IsaGuard guard;
  struct Shape {
    std::size_t m, n, k;
  };
  const Shape shapes[] = {{1, 1, 1},   {1, 1024, 256}, {2, 33, 17},  {3, 1024, 256}, {7, 13, 5},
                          {13, 31, 300}, {97, 65, 129}, {128, 256, 256}, {150, 40, 513}, {300, 17, 128}};
  std::uint64_t seed = 1;
  for (Isa isa : available_isas()) {
    kern::set_active_isa(isa);
    for (const auto& s : shapes)
      for (Trans ta : {Trans::no, Trans::yes})
        for (Trans tb : {Trans::no, Trans::yes})
          for (bool acc : {false, true}) {
            const std::size_t lda = (ta == Trans::no ? s.k : s.m) + 3;
            const std::size_t ldb = (tb == Trans::no ? s.n : s.k) + 1;
            const std::size_t ldc = s.n + 2;
            const auto a = test::random_floats((ta == Trans::no ? s.m : s.k) * lda, seed++);
            const auto b = test::random_floats((tb == Trans::no ? s.k : s.n) * ldb, seed++);
            auto c = test::random_floats(s.m * ldc, seed++);
            const auto want = oracle_gemm(ta, tb, s.m, s.n, s.k, a, lda, b, ldb, c, ldc, acc);
            kern::gemm(ta, tb, s.m, s.n, s.k, a.data(), lda, b.data(), ldb, c.data(), ldc, acc);
            double worst = 0.0;
            for (std::size_t i = 0; i < s.m; ++i)
              for (std::size_t j = 0; j < s.n; ++j)
                worst = std::max(worst, std::abs(c[i * ldc + j] - want[i * ldc + j]));
            INFO(kern::isa_name(isa), " m=", s.m, " n=", s.n, " k=", s.k, " ta=", int(ta), " tb=", int(tb));
            CHECK(worst <= 2e-6 * static_cast<double>(s.k) + 1e-6);
          }
  }
}

TEST_CASE("gemm leaves the padding columns of C untouched") {
  IsaGuard guard;
  for (Isa isa : available_isas()) {
    kern::set_active_isa(isa);
    const std::size_t m = 19, n = 37, k = 23, ldc = 41;
    const auto a = test::random_floats(m * k, 7);
    const auto b = test::random_floats(k * n, 8);
    std::vector<float> c(m * ldc, 42.f);
    kern::gemm(Trans::no, Trans::no, m, n, k, a.data(), k, b.data(), n, c.data(), ldc, false);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = n; j < ldc; ++j) CHECK(c[i * ldc + j] == 42.f);
  }
}

TEST_CASE("elementwise maps match libm within a few ulps") {
  IsaGuard guard;
  const std::size_t n = 4099;  // odd length exercises the vector tail
  auto base = test::random_floats(n, 11, -30.f, 30.f);
  base[0] = 0.f;
  base[1] = -0.f;
  base[2] = 1e-7f;
  base[3] = -88.f;
  base[4] = 80.f;
  for (Isa isa : available_isas()) {
    kern::set_active_isa(isa);
    INFO(kern::isa_name(isa));
    auto x = base;
    kern::tanh_inplace(x.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(x[i] - std::tanh(double(base[i]))) <= 4e-7);
    x = base;
    kern::sigmoid_inplace(x.data(), n);
    for (std::size_t i = 0; i < n; ++i) {
      const double want = 1.0 / (1.0 + std::exp(-double(base[i])));
      CHECK(std::abs(x[i] - want) <= 4e-7 * std::max(want, 1e-3));
    }
    x = base;
    kern::softplus_inplace(x.data(), n);
    for (std::size_t i = 0; i < n; ++i) {
      const double want = std::max(double(base[i]), 0.0) + std::log1p(std::exp(-std::abs(double(base[i]))));
      CHECK(std::abs(x[i] - want) <= 1e-6 * std::max(want, 1e-6) + 1e-12);
    }
    x = base;
    kern::exp_inplace(x.data(), n);
    for (std::size_t i = 0; i < n; ++i) {
      const double want = std::exp(double(base[i]));
      CHECK(std::abs(x[i] - want) <= 4e-7 * want + 1e-37);  // denormals may flush
    }
    auto pos = test::random_floats(n, 12, 1e-6f, 1e4f);
    x = pos;
    kern::log_inplace(x.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(x[i] - std::log(double(pos[i]))) <= 1e-6 * std::max(1.0, std::abs(std::log(double(pos[i])))));
  }
}

TEST_CASE("adam update agrees across instruction sets") {
  IsaGuard guard;
  const std::size_t n = 1003;
  const auto g = test::random_floats(n, 21);
  const auto p0 = test::random_floats(n, 22);
  kern::AdamStep s{5e-4f, 0.9f, 0.999f, 1e-8f, 0.f, 0.f};
  std::vector<std::vector<float>> results;
  for (Isa isa : available_isas()) {
    kern::set_active_isa(isa);
    auto p = p0;
    std::vector<float> m(n), v(n);
    for (int t = 1; t <= 5; ++t) {
      s.bias1 = 1.f - std::pow(0.9f, float(t));
      s.bias2 = 1.f - std::pow(0.999f, float(t));
      kern::adam_update(p.data(), g.data(), m.data(), v.data(), n, s);
    }
    results.push_back(p);
  }
  // Oracle: textbook bias-corrected update in double.
  std::vector<double> p(p0.begin(), p0.end()), m(n), v(n);
  for (int t = 1; t <= 5; ++t)
    for (std::size_t i = 0; i < n; ++i) {
      m[i] = 0.9 * m[i] + 0.1 * g[i];
      v[i] = 0.999 * v[i] + 0.001 * double(g[i]) * g[i];
      const double mh = m[i] / (1 - std::pow(0.9, t)), vh = v[i] / (1 - std::pow(0.999, t));
      p[i] -= 5e-4 * mh / (std::sqrt(vh) + 1e-8);
    }
  for (const auto& r : results)
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(r[i] - p[i]) <= 1e-6);
}

TEST_CASE("isa selection rejects unsupported targets") {
  IsaGuard guard;
  for (Isa isa : {Isa::scalar, Isa::avx2, Isa::avx512}) {
    if (kern::isa_supported(isa)) {
      kern::set_active_isa(isa);
      CHECK(kern::active_isa() == isa);
    } else {
      CHECK_THROWS(kern::set_active_isa(isa));
    }
  }
  CHECK(kern::isa_supported(Isa::scalar));
}
