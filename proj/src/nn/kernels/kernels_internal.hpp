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

// Entry points of the per-ISA translation units. These files are compiled
// with ISA-specific flags, so nothing that crosses this boundary may be an
// inline function or template the linker could merge with a baseline copy.

#ifndef RESTCN_SRC_NN_KERNELS_KERNELS_INTERNAL_HPP_
#define RESTCN_SRC_NN_KERNELS_KERNELS_INTERNAL_HPP_

#include <cstddef>

#include "restcn/nn/kernels.hpp"

namespace restcn::nn::kernels::detail {

// Cache blocking shared by every variant; each is a multiple of all MR / NR.
inline constexpr std::size_t kBlockK = 256;
inline constexpr std::size_t kBlockM = 96;
inline constexpr std::size_t kBlockN = 512;

template <typename T>
struct GemmArgs {
  std::size_t m, n, k;
  MatRef<T> a, b;
  T* c;
  std::size_t ldc;
  bool accumulate;
  T* a_pack;  // kBlockM * kBlockK
  T* b_pack;  // kBlockK * kBlockN
};

void gemm_scalar(const GemmArgs<float>& args);
void gemm_scalar(const GemmArgs<double>& args);
void adam_scalar(const AdamCoefficients& c, std::size_t n, float* p,
                 const float* g, float* m, float* v);
void adam_scalar(const AdamCoefficients& c, std::size_t n, double* p,
                 const double* g, double* m, double* v);

#if defined(RESTCN_HAVE_X86_KERNELS)
void gemm_avx2(const GemmArgs<float>& args);
void adam_avx2(const AdamCoefficients& c, std::size_t n, float* p,
               const float* g, float* m, float* v);
void gemm_avx512(const GemmArgs<float>& args);
void adam_avx512(const AdamCoefficients& c, std::size_t n, float* p,
                 const float* g, float* m, float* v);
#endif

}  // namespace restcn::nn::kernels::detail

#endif  // RESTCN_SRC_NN_KERNELS_KERNELS_INTERNAL_HPP_
