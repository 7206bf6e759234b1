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

#ifndef RESTCN_NN_OPTIM_HPP_
#define RESTCN_NN_OPTIM_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace restcn::nn {

template <typename T>
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  std::vector<T> m;
  std::vector<T> v;

  explicit AdamState(std::size_t n = 0) : m(n, T(0)), v(n, T(0)) {}
};

// One bias-corrected Adam update. A non-finite gradient leaves params and
// state untouched and throws DivergenceError.
template <typename T>
void adam_step(std::span<T> params, std::span<const T> grads, AdamState<T>& state,
               double lr);

struct LrSchedule {
  double base_lr = 0.001;
  std::size_t total_steps = 1;
};

// One cosine cycle: 0.5 * base_lr * (1 + cos(pi * step / total_steps)).
// Steps past the end are clamped to the final value.
double cosine_lr(std::size_t step, const LrSchedule& schedule);

}  // namespace restcn::nn

#endif  // RESTCN_NN_OPTIM_HPP_
