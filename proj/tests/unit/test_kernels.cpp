/*
 * Copyright 2026 The restcn Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "restcn/common/error.hpp"
#include "restcn/nn/kernels.hpp"

namespace restcn::nn::kernels {
namespace {

struct Shape3 {
  std::size_t m, n, k;
};

const Shape3 kShapes[] = {{1, 1, 1},    {3, 5, 7},     {6, 16, 8},    {8, 32, 9},
                          {7, 17, 33},  {13, 31, 5},   {97, 33, 257}, {100, 530, 40},
                          {64, 64, 600}, {200, 3, 300}, {5, 1000, 3}};

std::vector<Isa> supported_simd() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::kAvx2, Isa::kAvx512}) {
    if (isa_supported(isa)) out.push_back(isa);
  }
  return out;
}

// Straight triple loop in long double.
std::vector<long double> naive(const Shape3& s, const std::vector<double>& a,
                               const std::vector<double>& b) {
  std::vector<long double> c(s.m * s.n, 0.0L);
  for (std::size_t i = 0; i < s.m; ++i) {
    for (std::size_t j = 0; j < s.n; ++j) {
      for (std::size_t p = 0; p < s.k; ++p) {
        c[i * s.n + j] += static_cast<long double>(a[i * s.k + p]) * b[p * s.n + j];
      }
    }
  }
  return c;
}

TEST(Gemm, DoubleMatchesTripleLoop) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (const auto& s : kShapes) {
    std::vector<double> a(s.m * s.k), b(s.k * s.n), c(s.m * s.n, 0.0);
    for (auto& x : a) x = d(rng);
    for (auto& x : b) x = d(rng);
    gemm(s.m, s.n, s.k, row_major(a.data(), s.k), row_major(b.data(), s.n), c.data(), s.n, false);
    const auto ref = naive(s, a, b);
    for (std::size_t i = 0; i < c.size(); ++i) {
      ASSERT_NEAR(c[i], static_cast<double>(ref[i]), 1e-12 * static_cast<double>(s.k))
          << s.m << "x" << s.n << "x" << s.k << " at " << i;
    }
  }
}

TEST(Gemm, AccumulateAddsToExistingOutput) {
  std::vector<double> a = {1, 2, 3, 4}, b = {1, 0, 0, 1}, c = {10, 20, 30, 40};
  gemm(2, 2, 2, row_major(a.data(), 2), row_major(b.data(), 2), c.data(), 2, true);
  EXPECT_EQ(c, (std::vector<double>{11, 22, 33, 44}));
  gemm(2, 2, 2, row_major(a.data(), 2), row_major(b.data(), 2), c.data(), 2, false);
  EXPECT_EQ(c, (std::vector<double>{1, 2, 3, 4}));
}

TEST(Gemm, TransposedAndOffsetViews) {
  // A^T B with A stored [k, m]; B read through a column offset table.
  const std::size_t m = 5, n = 4, k = 3;
  std::vector<double> at(k * m), b(k * 10), c(m * n);
  for (std::size_t i = 0; i < at.size(); ++i) at[i] = static_cast<double>(i) * 0.5 - 2.0;
  for (std::size_t i = 0; i < b.size(); ++i) b[i] = static_cast<double>(i % 7) - 3.0;
  const std::ptrdiff_t cols[n] = {9, 0, 4, 4};
  MatRef<double> bv{b.data(), 10, 1, nullptr, cols};
  gemm(m, n, k, transposed(at.data(), m), bv, c.data(), n, false);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double want = 0.0;
      for (std::size_t p = 0; p < k; ++p) want += at[p * m + i] * b[p * 10 + cols[j]];
      EXPECT_DOUBLE_EQ(c[i * n + j], want);
    }
  }
}

TEST(Gemm, RowOffsetsReadOverlappingWindows) {
  // Rows starting every 2 elements of a length-12 signal, 4 wide.
  std::vector<float> x(12);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<float>(i);
  const std::ptrdiff_t rows[5] = {0, 2, 4, 6, 8};
  MatRef<float> a{x.data(), 0, 1, rows, nullptr};
  std::vector<float> w = {1, 1, 1, 1}, c(5);
  gemm(5, 1, 4, a, row_major(w.data(), 1), c.data(), 1, false);
  EXPECT_EQ(c, (std::vector<float>{6, 14, 22, 30, 38}));
}

TEST(Gemm, SimdMatchesScalarReference) {
  const auto isas = supported_simd();
  if (isas.empty()) GTEST_SKIP() << "no SIMD kernels on this machine";
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<float> d(-1.0f, 1.0f);
  for (const auto& s : kShapes) {
    for (bool acc : {false, true}) {
      std::vector<float> a(s.m * s.k), b(s.k * s.n), c0(s.m * s.n);
      for (auto& x : a) x = d(rng);
      for (auto& x : b) x = d(rng);
      for (auto& x : c0) x = d(rng);
      std::vector<float> ref = c0;
      gemm_isa(Isa::kScalar, s.m, s.n, s.k, row_major(a.data(), s.k), row_major(b.data(), s.n),
               ref.data(), s.n, acc);
      for (Isa isa : isas) {
        std::vector<float> got = c0;
        gemm_isa(isa, s.m, s.n, s.k, row_major(a.data(), s.k), row_major(b.data(), s.n),
                 got.data(), s.n, acc);
        const float tol = 4e-7f * static_cast<float>(s.k + 1) * 2.0f;
        for (std::size_t i = 0; i < got.size(); ++i) {
          ASSERT_NEAR(got[i], ref[i], tol) << isa_name(isa) << " " << s.m << "x" << s.n << "x"
                                           << s.k << " at " << i;
        }
      }
    }
  }
}

TEST(Gemm, SimdHandlesTransposedInputs) {
  const auto isas = supported_simd();
  if (isas.empty()) GTEST_SKIP() << "no SIMD kernels on this machine";
  const std::size_t m = 37, n = 45, k = 29;
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<float> d(-1.0f, 1.0f);
  std::vector<float> at(k * m), bt(n * k);
  for (auto& x : at) x = d(rng);
  for (auto& x : bt) x = d(rng);
  std::vector<float> ref(m * n);
  gemm_isa(Isa::kScalar, m, n, k, transposed(at.data(), m), transposed(bt.data(), k), ref.data(),
           n, false);
  for (Isa isa : isas) {
    std::vector<float> got(m * n);
    gemm_isa(isa, m, n, k, transposed(at.data(), m), transposed(bt.data(), k), got.data(), n,
             false);
    for (std::size_t i = 0; i < got.size(); ++i) ASSERT_NEAR(got[i], ref[i], 1e-4f);
  }
}

TEST(Adam, SimdMatchesScalarToRounding) {
  const auto isas = supported_simd();
  if (isas.empty()) GTEST_SKIP() << "no SIMD kernels on this machine";
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<float> d(-1.0f, 1.0f);
  for (std::size_t n : {1u, 7u, 8u, 15u, 16u, 17u, 33u, 1000u}) {
    std::vector<float> p0(n), g(n), m0(n), v0(n);
    for (std::size_t i = 0; i < n; ++i) {
      p0[i] = d(rng);
      g[i] = d(rng);
      m0[i] = 0.1f * d(rng);
      v0[i] = 0.01f * std::abs(d(rng));
    }
    AdamCoefficients c;
    c.lr = 1e-3;
    c.bias_correction1 = 1.0 - 0.9 * 0.9 * 0.9;
    c.bias_correction2 = 1.0 - 0.999 * 0.999 * 0.999;
    auto p_ref = p0, m_ref = m0, v_ref = v0;
    adam_update_isa(Isa::kScalar, c, n, p_ref.data(), g.data(), m_ref.data(), v_ref.data());
    for (Isa isa : isas) {
      auto p = p0, m = m0, v = v0;
      adam_update_isa(isa, c, n, p.data(), g.data(), m.data(), v.data());
      for (std::size_t i = 0; i < n; ++i) {
        const float m_scale = std::abs(m0[i]) + std::abs(g[i]);
        const float v_scale = v0[i] + g[i] * g[i];
        ASSERT_NEAR(m[i], m_ref[i], 2e-7f * m_scale) << isa_name(isa);
        ASSERT_NEAR(v[i], v_ref[i], 2e-7f * v_scale) << isa_name(isa);
        ASSERT_NEAR(p[i], p_ref[i], 2e-7f * std::abs(p_ref[i]) + 1e-8f) << isa_name(isa);
      }
    }
  }
}

TEST(Dispatch, CapsAtDetectedIsaAndRejectsUnsupported) {
  const Isa saved = active_isa();
  EXPECT_TRUE(isa_supported(Isa::kScalar));
  set_active_isa(Isa::kScalar);
  EXPECT_EQ(active_isa(), Isa::kScalar);
  for (Isa isa : {Isa::kAvx2, Isa::kAvx512}) {
    if (!isa_supported(isa)) {
      EXPECT_THROW(set_active_isa(isa), DomainError);
    }
  }
  set_active_isa(saved);
  EXPECT_EQ(active_isa(), saved);
}

TEST(Dispatch, ActiveIsaRoutesFloatGemm) {
  std::vector<float> a = {1, 2, 3, 4, 5, 6}, b = {1, 2, 3, 4, 5, 6}, c(4);
  const Isa saved = active_isa();
  for (Isa isa : {Isa::kScalar, Isa::kAvx2, Isa::kAvx512}) {
    if (!isa_supported(isa)) continue;
    set_active_isa(isa);
    gemm(2, 2, 3, row_major(a.data(), 3), row_major(b.data(), 2), c.data(), 2, false);
    EXPECT_EQ(c, (std::vector<float>{22, 28, 49, 64})) << isa_name(isa);
  }
  set_active_isa(saved);
}

}  // namespace
}  // namespace restcn::nn::kernels
