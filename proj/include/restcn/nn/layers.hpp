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

// Forward and backward passes of the layers the residual TCN is built from.
// All activations are [batch, time, channel]; every backward returns exact
// analytic gradients. Parameter gradients are written into caller-provided
// spans so a model can point them straight into its gradient arena.

#ifndef RESTCN_NN_LAYERS_HPP_
#define RESTCN_NN_LAYERS_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "restcn/nn/tensor.hpp"

namespace restcn::nn {

// 1-D convolution over the time axis. Output length is
// floor((T + pad_left + pad_right - kernel) / stride) + 1; padding is zeros.
struct ConvSpec {
  std::size_t filters = 1;
  std::size_t kernel = 1;
  std::size_t stride = 1;
  std::size_t pad_left = 0;
  std::size_t pad_right = 0;

  // Zero padding that keeps length ceil(T / stride).
  static ConvSpec same(std::size_t filters, std::size_t kernel, std::size_t stride) {
    return {filters, kernel, stride, (kernel - 1) / 2, kernel - 1 - (kernel - 1) / 2};
  }

  void validate() const;
  // Throws DimensionError when the padded input is shorter than the kernel.
  std::size_t output_length(std::size_t t) const;
};

// `weights` is [kernel * c_in, filters], row index k * c_in + c.
// `bias` is [filters] or empty.
template <typename T>
Tensor<T> conv1d_forward(const Tensor<T>& x, const ConvSpec& spec,
                         std::span<const T> weights, std::span<const T> bias);

// Any of dx / dweights / dbias may be null/empty to skip that gradient.
template <typename T>
void conv1d_backward(const Tensor<T>& x, const ConvSpec& spec,
                     std::span<const T> weights, const Tensor<T>& dy,
                     Tensor<T>* dx, std::span<T> dweights, std::span<T> dbias);

template <typename T>
struct BatchNormCache {
  Tensor<T> x_hat;
  std::vector<T> inv_std;
};

inline constexpr double kBatchNormEpsilon = 1e-5;
inline constexpr double kBatchNormMomentum = 0.9;

// Normalizes each channel with statistics over batch x time and folds them
// into the running estimates: running = momentum * running + (1 - momentum) * batch.
template <typename T>
Tensor<T> batchnorm_forward_train(const Tensor<T>& x, std::span<const T> gamma,
                                  std::span<const T> beta, std::span<T> running_mean,
                                  std::span<T> running_var, BatchNormCache<T>* cache);

template <typename T>
Tensor<T> batchnorm_forward_infer(const Tensor<T>& x, std::span<const T> gamma,
                                  std::span<const T> beta,
                                  std::span<const T> running_mean,
                                  std::span<const T> running_var);

template <typename T>
Tensor<T> batchnorm_backward(const Tensor<T>& dy, const BatchNormCache<T>& cache,
                             std::span<const T> gamma, std::span<T> dgamma,
                             std::span<T> dbeta);

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& x);
// Gradient is masked by the forward input (x > 0).
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& x, const Tensor<T>& dy);

// [B, T, C] -> [B, C]
template <typename T>
Tensor<T> global_avg_pool_forward(const Tensor<T>& x);
template <typename T>
Tensor<T> global_avg_pool_backward(const Tensor<T>& dy, std::size_t time);

// [B, D] x [D, N] + [N] -> [B, N]
template <typename T>
Tensor<T> linear_forward(const Tensor<T>& x, std::span<const T> weights,
                         std::span<const T> bias, std::size_t out_features);
template <typename T>
void linear_backward(const Tensor<T>& x, std::span<const T> weights,
                     const Tensor<T>& dy, Tensor<T>* dx, std::span<T> dweights,
                     std::span<T> dbias);

}  // namespace restcn::nn

#endif  // RESTCN_NN_LAYERS_HPP_
