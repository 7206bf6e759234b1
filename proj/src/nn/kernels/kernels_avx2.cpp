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

// AVX2 + FMA kernels. Built with -mavx2 -mfma; only reached after the
// dispatcher has checked the CPU.

#include <immintrin.h>

#include <cstdint>

#include "kernels_internal.hpp"

namespace restcn::nn::kernels::detail {
namespace {

#include "gemm_driver.inl"

// 6 x 16 register tile: 12 accumulators, 2 B vectors, 1 broadcast.
struct Avx2Kernel {
  using value_type = float;
  static constexpr std::size_t kMr = 6;
  static constexpr std::size_t kNr = 16;

  template <typename APanel>
  static void run(std::size_t kc, APanel a, const float* b, float* c,
                  std::ptrdiff_t ldc, bool load_c) {
    __m256 acc[kMr][2];
#pragma GCC unroll 6
    for (std::size_t i = 0; i < kMr; ++i) {
      acc[i][0] = _mm256_setzero_ps();
      acc[i][1] = _mm256_setzero_ps();
    }
    for (std::size_t p = 0; p < kc; ++p) {
      const __m256 b0 = _mm256_loadu_ps(b);
      const __m256 b1 = _mm256_loadu_ps(b + 8);
#pragma GCC unroll 6
      for (std::size_t i = 0; i < kMr; ++i) {
        const __m256 ai = _mm256_set1_ps(a(i));
        acc[i][0] = _mm256_fmadd_ps(ai, b0, acc[i][0]);
        acc[i][1] = _mm256_fmadd_ps(ai, b1, acc[i][1]);
      }
      a.advance();
      b += kNr;
    }
#pragma GCC unroll 6
    for (std::size_t i = 0; i < kMr; ++i) {
      float* row = c + static_cast<std::ptrdiff_t>(i) * ldc;
      if (load_c) {
        acc[i][0] = _mm256_add_ps(acc[i][0], _mm256_loadu_ps(row));
        acc[i][1] = _mm256_add_ps(acc[i][1], _mm256_loadu_ps(row + 8));
      }
      _mm256_storeu_ps(row, acc[i][0]);
      _mm256_storeu_ps(row + 8, acc[i][1]);
    }
  }
};

inline __m256 adam_lane(__m256 g, __m256& m, __m256& v, __m256 p, __m256 b1,
                        __m256 one_b1, __m256 b2, __m256 one_b2, __m256 step,
                        __m256 inv_bc2, __m256 eps) {
  m = _mm256_add_ps(_mm256_mul_ps(b1, m), _mm256_mul_ps(one_b1, g));
  v = _mm256_add_ps(_mm256_mul_ps(b2, v), _mm256_mul_ps(one_b2, _mm256_mul_ps(g, g)));
  const __m256 denom = _mm256_add_ps(_mm256_sqrt_ps(_mm256_mul_ps(v, inv_bc2)), eps);
  return _mm256_sub_ps(p, _mm256_div_ps(_mm256_mul_ps(step, m), denom));
}

}  // namespace

void gemm_avx2(const GemmArgs<float>& args) { gemm_driver<Avx2Kernel>(args); }

void adam_avx2(const AdamCoefficients& k, std::size_t n, float* p,
               const float* g, float* m, float* v) {
  const __m256 b1 = _mm256_set1_ps(static_cast<float>(k.beta1));
  const __m256 b2 = _mm256_set1_ps(static_cast<float>(k.beta2));
  const __m256 one_b1 = _mm256_set1_ps(static_cast<float>(1.0 - k.beta1));
  const __m256 one_b2 = _mm256_set1_ps(static_cast<float>(1.0 - k.beta2));
  const __m256 step = _mm256_set1_ps(static_cast<float>(k.lr / k.bias_correction1));
  const __m256 inv_bc2 = _mm256_set1_ps(static_cast<float>(1.0 / k.bias_correction2));
  const __m256 eps = _mm256_set1_ps(static_cast<float>(k.epsilon));
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 mi = _mm256_loadu_ps(m + i);
    __m256 vi = _mm256_loadu_ps(v + i);
    const __m256 pi = adam_lane(_mm256_loadu_ps(g + i), mi, vi, _mm256_loadu_ps(p + i),
                                b1, one_b1, b2, one_b2, step, inv_bc2, eps);
    _mm256_storeu_ps(m + i, mi);
    _mm256_storeu_ps(v + i, vi);
    _mm256_storeu_ps(p + i, pi);
  }
  if (i < n) {
    const int rem = static_cast<int>(n - i);
    alignas(32) std::int32_t lanes[8];
    for (int l = 0; l < 8; ++l) lanes[l] = l < rem ? -1 : 0;
    const __m256i mask = _mm256_load_si256(reinterpret_cast<const __m256i*>(lanes));
    __m256 mi = _mm256_maskload_ps(m + i, mask);
    __m256 vi = _mm256_maskload_ps(v + i, mask);
    const __m256 pi = adam_lane(_mm256_maskload_ps(g + i, mask), mi, vi,
                                _mm256_maskload_ps(p + i, mask), b1, one_b1, b2,
                                one_b2, step, inv_bc2, eps);
    _mm256_maskstore_ps(m + i, mask, mi);
    _mm256_maskstore_ps(v + i, mask, vi);
    _mm256_maskstore_ps(p + i, mask, pi);
  }
}

}  // namespace restcn::nn::kernels::detail
