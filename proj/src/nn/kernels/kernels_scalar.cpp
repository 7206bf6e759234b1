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

// Portable reference kernels.

#include <cmath>

#include "kernels_internal.hpp"

namespace restcn::nn::kernels::detail {
namespace {

#include "gemm_driver.inl"

template <typename T>
struct ScalarKernel {
  using value_type = T;
  static constexpr std::size_t kMr = 4;
  static constexpr std::size_t kNr = 4;

  template <typename APanel>
  static void run(std::size_t kc, APanel a, const T* b, T* c,
                  std::ptrdiff_t ldc, bool load_c) {
    T acc[kMr][kNr] = {};
    for (std::size_t p = 0; p < kc; ++p) {
      for (std::size_t i = 0; i < kMr; ++i) {
        const T ai = a(i);
        for (std::size_t j = 0; j < kNr; ++j) acc[i][j] += ai * b[j];
      }
      a.advance();
      b += kNr;
    }
    for (std::size_t i = 0; i < kMr; ++i) {
      for (std::size_t j = 0; j < kNr; ++j) {
        T& dst = c[static_cast<std::ptrdiff_t>(i) * ldc + static_cast<std::ptrdiff_t>(j)];
        dst = load_c ? dst + acc[i][j] : acc[i][j];
      }
    }
  }
};

template <typename T>
void adam_impl(const AdamCoefficients& k, std::size_t n, T* p, const T* g, T* m,
               T* v) {
  const T b1 = static_cast<T>(k.beta1);
  const T b2 = static_cast<T>(k.beta2);
  const T one_b1 = static_cast<T>(1.0 - k.beta1);
  const T one_b2 = static_cast<T>(1.0 - k.beta2);
  const T step = static_cast<T>(k.lr / k.bias_correction1);
  const T inv_bc2 = static_cast<T>(1.0 / k.bias_correction2);
  const T eps = static_cast<T>(k.epsilon);
  for (std::size_t i = 0; i < n; ++i) {
    const T gi = g[i];
    const T mi = b1 * m[i] + one_b1 * gi;
    const T vi = b2 * v[i] + one_b2 * (gi * gi);
    m[i] = mi;
    v[i] = vi;
    p[i] -= step * mi / (std::sqrt(vi * inv_bc2) + eps);
  }
}

}  // namespace

void gemm_scalar(const GemmArgs<float>& args) { gemm_driver<ScalarKernel<float>>(args); }
void gemm_scalar(const GemmArgs<double>& args) { gemm_driver<ScalarKernel<double>>(args); }

void adam_scalar(const AdamCoefficients& c, std::size_t n, float* p,
                 const float* g, float* m, float* v) {
  adam_impl(c, n, p, g, m, v);
}
void adam_scalar(const AdamCoefficients& c, std::size_t n, double* p,
                 const double* g, double* m, double* v) {
  adam_impl(c, n, p, g, m, v);
}

}  // namespace restcn::nn::kernels::detail
