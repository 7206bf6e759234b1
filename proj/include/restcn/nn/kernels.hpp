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

// Arithmetic inner loops of the engine. Every kernel has a portable scalar
// reference; single-precision kernels additionally have AVX2 and AVX-512
// variants that are picked at runtime from what the CPU reports. The
// environment variable RESTCN_ISA (scalar|avx2|avx512) caps the choice.
//
// Double precision always runs the scalar path: it is only used by the
// verification suites, where bit-stable results matter more than speed.

#ifndef RESTCN_NN_KERNELS_HPP_
#define RESTCN_NN_KERNELS_HPP_

#include <cstddef>
#include <string_view>

namespace restcn::nn::kernels {

enum class Isa { kScalar, kAvx2, kAvx512 };

std::string_view isa_name(Isa isa);
bool isa_supported(Isa isa);
// Best ISA the CPU supports, capped by RESTCN_ISA when set.
Isa detected_isa();
Isa active_isa();
// Throws DomainError if `isa` is not supported on this CPU.
void set_active_isa(Isa isa);

// Read-only strided matrix view. Element (i, j) lives at
//   data[(row_off ? row_off[i] : i * rs) + (col_off ? col_off[j] : j * cs)].
// The offset tables let the convolution feed overlapping time windows to the
// GEMM without materializing an im2col buffer.
template <typename T>
struct MatRef {
  const T* data = nullptr;
  std::ptrdiff_t rs = 0;
  std::ptrdiff_t cs = 1;
  const std::ptrdiff_t* row_off = nullptr;
  const std::ptrdiff_t* col_off = nullptr;

  const T* row(std::size_t i) const {
    return data + (row_off ? row_off[i] : static_cast<std::ptrdiff_t>(i) * rs);
  }
  std::ptrdiff_t col(std::size_t j) const {
    return col_off ? col_off[j] : static_cast<std::ptrdiff_t>(j) * cs;
  }
  T at(std::size_t i, std::size_t j) const { return row(i)[col(j)]; }
};

template <typename T>
MatRef<T> row_major(const T* data, std::size_t ld) {
  return {data, static_cast<std::ptrdiff_t>(ld), 1, nullptr, nullptr};
}
// View of the transpose of a row-major matrix with leading dimension `ld`.
template <typename T>
MatRef<T> transposed(const T* data, std::size_t ld) {
  return {data, 1, static_cast<std::ptrdiff_t>(ld), nullptr, nullptr};
}

// C[m x n] (row-major, leading dimension ldc) = A[m x k] * B[k x n],
// or C += A * B when `accumulate` is set.
void gemm(std::size_t m, std::size_t n, std::size_t k, MatRef<float> a,
          MatRef<float> b, float* c, std::size_t ldc, bool accumulate);
void gemm(std::size_t m, std::size_t n, std::size_t k, MatRef<double> a,
          MatRef<double> b, double* c, std::size_t ldc, bool accumulate);
// Forces a specific variant; used by the equivalence tests.
void gemm_isa(Isa isa, std::size_t m, std::size_t n, std::size_t k,
              MatRef<float> a, MatRef<float> b, float* c, std::size_t ldc,
              bool accumulate);

struct AdamCoefficients {
  double lr = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // 1 - beta^t for the current step t.
  double bias_correction1 = 1.0;
  double bias_correction2 = 1.0;
};

// Bias-corrected Adam update over n contiguous parameters, in place.
void adam_update(const AdamCoefficients& c, std::size_t n, float* param,
                 const float* grad, float* m, float* v);
void adam_update(const AdamCoefficients& c, std::size_t n, double* param,
                 const double* grad, double* m, double* v);
void adam_update_isa(Isa isa, const AdamCoefficients& c, std::size_t n,
                     float* param, const float* grad, float* m, float* v);

}  // namespace restcn::nn::kernels

#endif  // RESTCN_NN_KERNELS_HPP_
