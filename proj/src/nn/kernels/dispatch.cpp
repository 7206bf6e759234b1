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

#include <atomic>
#include <cstdlib>
#include <string>
#include <vector>

#include "kernels_internal.hpp"
#include "restcn/common/error.hpp"
#include "restcn/nn/kernels.hpp"

namespace restcn::nn::kernels {
namespace {

Isa parse_cap(const char* env) {
  const std::string s(env);
  if (s == "scalar") return Isa::kScalar;
  if (s == "avx2") return Isa::kAvx2;
  return Isa::kAvx512;
}

Isa best_isa() {
  Isa best = Isa::kScalar;
  if (isa_supported(Isa::kAvx512)) {
    best = Isa::kAvx512;
  } else if (isa_supported(Isa::kAvx2)) {
    best = Isa::kAvx2;
  }
  if (const char* env = std::getenv("RESTCN_ISA")) {
    const Isa cap = parse_cap(env);
    if (static_cast<int>(cap) < static_cast<int>(best)) best = cap;
  }
  return best;
}

std::atomic<Isa>& active() {
  static std::atomic<Isa> isa{best_isa()};
  return isa;
}

template <typename T>
struct PackBuffers {
  std::vector<T> a = std::vector<T>(detail::kBlockM * detail::kBlockK);
  std::vector<T> b = std::vector<T>(detail::kBlockK * detail::kBlockN);
};

template <typename T>
PackBuffers<T>& pack_buffers() {
  thread_local PackBuffers<T> buffers;
  return buffers;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
    case Isa::kAvx512:
      return "avx512";
  }
  return "unknown";
}

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return true;
#if defined(RESTCN_HAVE_X86_KERNELS)
    case Isa::kAvx2:
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    case Isa::kAvx512:
      return __builtin_cpu_supports("avx512f");
#else
    default:
      return false;
#endif
  }
  return false;
}

Isa detected_isa() { return best_isa(); }
Isa active_isa() { return active().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) {
  if (!isa_supported(isa)) {
    throw DomainError("ISA " + std::string(isa_name(isa)) + " not supported on this CPU");
  }
  active().store(isa, std::memory_order_relaxed);
}

void gemm_isa(Isa isa, std::size_t m, std::size_t n, std::size_t k,
              MatRef<float> a, MatRef<float> b, float* c, std::size_t ldc,
              bool accumulate) {
  auto& buf = pack_buffers<float>();
  const detail::GemmArgs<float> args{m, n, k, a, b, c, ldc, accumulate,
                                     buf.a.data(), buf.b.data()};
  switch (isa) {
#if defined(RESTCN_HAVE_X86_KERNELS)
    case Isa::kAvx512:
      detail::gemm_avx512(args);
      return;
    case Isa::kAvx2:
      detail::gemm_avx2(args);
      return;
#endif
    default:
      detail::gemm_scalar(args);
  }
}

void gemm(std::size_t m, std::size_t n, std::size_t k, MatRef<float> a,
          MatRef<float> b, float* c, std::size_t ldc, bool accumulate) {
  gemm_isa(active_isa(), m, n, k, a, b, c, ldc, accumulate);
}

void gemm(std::size_t m, std::size_t n, std::size_t k, MatRef<double> a,
          MatRef<double> b, double* c, std::size_t ldc, bool accumulate) {
  auto& buf = pack_buffers<double>();
  detail::gemm_scalar(detail::GemmArgs<double>{m, n, k, a, b, c, ldc, accumulate,
                                               buf.a.data(), buf.b.data()});
}

void adam_update_isa(Isa isa, const AdamCoefficients& c, std::size_t n,
                     float* param, const float* grad, float* m, float* v) {
  switch (isa) {
#if defined(RESTCN_HAVE_X86_KERNELS)
    case Isa::kAvx512:
      detail::adam_avx512(c, n, param, grad, m, v);
      return;
    case Isa::kAvx2:
      detail::adam_avx2(c, n, param, grad, m, v);
      return;
#endif
    default:
      detail::adam_scalar(c, n, param, grad, m, v);
  }
}

void adam_update(const AdamCoefficients& c, std::size_t n, float* param,
                 const float* grad, float* m, float* v) {
  adam_update_isa(active_isa(), c, n, param, grad, m, v);
}

void adam_update(const AdamCoefficients& c, std::size_t n, double* param,
                 const double* grad, double* m, double* v) {
  detail::adam_scalar(c, n, param, grad, m, v);
}

}  // namespace restcn::nn::kernels
