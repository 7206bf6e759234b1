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

#include "restcn/nn/optim.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <type_traits>
#include <numbers>
#include <string>

#include "restcn/common/error.hpp"
#include "restcn/nn/kernels.hpp"

namespace restcn::nn {
namespace {

// Branch-free scan: a value is inf or nan exactly when its exponent bits are
// all set.
template <typename T>
bool all_finite(std::span<const T> v) {
  using Bits = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  constexpr Bits exponent = static_cast<Bits>(sizeof(T) == 4 ? 0x7f800000ull : 0x7ff0000000000000ull);
  Bits bad = 0;
  for (const T x : v) bad |= static_cast<Bits>((std::bit_cast<Bits>(x) & exponent) == exponent);
  return bad == 0;
}

}  // namespace

template <typename T>
void adam_step(std::span<T> params, std::span<const T> grads, AdamState<T>& state,
               double lr) {
  if (params.size() != grads.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw DimensionError("adam: parameter, gradient and moment sizes differ");
  }
  if (!all_finite(grads)) {
    for (std::size_t i = 0; i < grads.size(); ++i) {
      if (!std::isfinite(grads[i])) {
        throw DivergenceError("adam: non-finite gradient at index " + std::to_string(i));
      }
    }
  }
  const std::uint64_t t = state.step + 1;
  kernels::AdamCoefficients c;
  c.lr = lr;
  c.beta1 = state.beta1;
  c.beta2 = state.beta2;
  c.epsilon = state.epsilon;
  c.bias_correction1 = 1.0 - std::pow(state.beta1, static_cast<double>(t));
  c.bias_correction2 = 1.0 - std::pow(state.beta2, static_cast<double>(t));
  kernels::adam_update(c, params.size(), params.data(), grads.data(), state.m.data(),
                       state.v.data());
  state.step = t;
}

template void adam_step(std::span<float>, std::span<const float>, AdamState<float>&, double);
template void adam_step(std::span<double>, std::span<const double>, AdamState<double>&, double);

double cosine_lr(std::size_t step, const LrSchedule& schedule) {
  if (!(schedule.base_lr > 0.0) || schedule.total_steps == 0) {
    throw DomainError("cosine schedule needs base_lr > 0 and total_steps >= 1");
  }
  const std::size_t s = step > schedule.total_steps ? schedule.total_steps : step;
  const double phase = std::numbers::pi * static_cast<double>(s) /
                       static_cast<double>(schedule.total_steps);
  return 0.5 * schedule.base_lr * (1.0 + std::cos(phase));
}

}  // namespace restcn::nn
