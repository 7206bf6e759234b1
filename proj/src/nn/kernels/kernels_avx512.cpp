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

// AVX-512F kernels. Built with -mavx512f; only reached after the dispatcher
// has checked the CPU.

#include <immintrin.h>

#include "kernels_internal.hpp"

namespace restcn::nn::kernels::detail {
namespace {

#include "gemm_driver.inl"

// 8 x 32 register tile: 16 accumulators, 2 B vectors, 1 broadcast.
struct Avx512Kernel {
  using value_type = float;
  static constexpr std::size_t kMr = 8;
  static constexpr std::size_t kNr = 32;

  template <typename APanel>
  static void run(std::size_t kc, APanel a, const float* b, float* c,
                  std::ptrdiff_t ldc, bool load_c) {
    __m512 acc[kMr][2];
#pragma GCC unroll 8
    for (std::size_t i = 0; i < kMr; ++i) {
      acc[i][0] = _mm512_setzero_ps();
      acc[i][1] = _mm512_setzero_ps();
    }
    for (std::size_t p = 0; p < kc; ++p) {
      const __m512 b0 = _mm512_loadu_ps(b);
      const __m512 b1 = _mm512_loadu_ps(b + 16);
#pragma GCC unroll 8
      for (std::size_t i = 0; i < kMr; ++i) {
        const __m512 ai = _mm512_set1_ps(a(i));
        acc[i][0] = _mm512_fmadd_ps(ai, b0, acc[i][0]);
        acc[i][1] = _mm512_fmadd_ps(ai, b1, acc[i][1]);
      }
      a.advance();
      b += kNr;
    }
#pragma GCC unroll 8
    for (std::size_t i = 0; i < kMr; ++i) {
      float* row = c + static_cast<std::ptrdiff_t>(i) * ldc;
      if (load_c) {
        acc[i][0] = _mm512_add_ps(acc[i][0], _mm512_loadu_ps(row));
        acc[i][1] = _mm512_add_ps(acc[i][1], _mm512_loadu_ps(row + 16));
      }
      _mm512_storeu_ps(row, acc[i][0]);
      _mm512_storeu_ps(row + 16, acc[i][1]);
    }
  }
};

}  // namespace

void gemm_avx512(const GemmArgs<float>& args) { gemm_driver<Avx512Kernel>(args); }

void adam_avx512(const AdamCoefficients& k, std::size_t n, float* p,
                 const float* g, float* m, float* v) {
  const __m512 b1 = _mm512_set1_ps(static_cast<float>(k.beta1));
  const __m512 b2 = _mm512_set1_ps(static_cast<float>(k.beta2));
  const __m512 one_b1 = _mm512_set1_ps(static_cast<float>(1.0 - k.beta1));
  const __m512 one_b2 = _mm512_set1_ps(static_cast<float>(1.0 - k.beta2));
  const __m512 step = _mm512_set1_ps(static_cast<float>(k.lr / k.bias_correction1));
  const __m512 inv_bc2 = _mm512_set1_ps(static_cast<float>(1.0 / k.bias_correction2));
  const __m512 eps = _mm512_set1_ps(static_cast<float>(k.epsilon));
  for (std::size_t i = 0; i < n; i += 16) {
    const std::size_t rem = n - i;
    const __mmask16 mask = rem >= 16 ? static_cast<__mmask16>(0xFFFF)
                                     : static_cast<__mmask16>((1u << rem) - 1u);
    const __m512 gi = _mm512_maskz_loadu_ps(mask, g + i);
    __m512 mi = _mm512_maskz_loadu_ps(mask, m + i);
    __m512 vi = _mm512_maskz_loadu_ps(mask, v + i);
    const __m512 pi = _mm512_maskz_loadu_ps(mask, p + i);
    mi = _mm512_add_ps(_mm512_mul_ps(b1, mi), _mm512_mul_ps(one_b1, gi));
    vi = _mm512_add_ps(_mm512_mul_ps(b2, vi), _mm512_mul_ps(one_b2, _mm512_mul_ps(gi, gi)));
    const __m512 denom = _mm512_add_ps(_mm512_sqrt_ps(_mm512_mul_ps(vi, inv_bc2)), eps);
    const __m512 out = _mm512_sub_ps(pi, _mm512_div_ps(_mm512_mul_ps(step, mi), denom));
    _mm512_mask_storeu_ps(m + i, mask, mi);
    _mm512_mask_storeu_ps(v + i, mask, vi);
    _mm512_mask_storeu_ps(p + i, mask, out);
  }
}

}  // namespace restcn::nn::kernels::detail
