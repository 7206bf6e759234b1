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

#include "restcn/nn/layers.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <type_traits>
#include <memory>
#include <string>

#include "restcn/nn/kernels.hpp"

namespace restcn::nn {
namespace {

std::string dims(std::size_t a, std::size_t b) {
  return std::to_string(a) + " vs " + std::to_string(b);
}

// Copies x into a zero-padded [B, T + pl + pr, C] buffer.
template <typename T>
std::vector<T> pad_time(const Tensor<T>& x, std::size_t pl, std::size_t pr) {
  const std::size_t b = x.dim(0), t = x.dim(1), c = x.dim(2);
  const std::size_t tp = t + pl + pr;
  std::vector<T> out(b * tp * c, T(0));
  for (std::size_t i = 0; i < b; ++i) {
    std::copy(x.data() + i * t * c, x.data() + (i + 1) * t * c,
              out.data() + (i * tp + pl) * c);
  }
  return out;
}

// Start offset of every output row's receptive window in the padded input.
std::vector<std::ptrdiff_t> window_offsets(std::size_t batch, std::size_t t_out,
                                           std::size_t t_pad, std::size_t c,
                                           std::size_t stride) {
  std::vector<std::ptrdiff_t> off(batch * t_out);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t t = 0; t < t_out; ++t) {
      off[b * t_out + t] = static_cast<std::ptrdiff_t>((b * t_pad + t * stride) * c);
    }
  }
  return off;
}

template <typename T>
void check_conv_params(const Tensor<T>& x, const ConvSpec& spec,
                       std::span<const T> weights, std::size_t bias_size) {
  spec.validate();
  require_rank(x, 3, "conv1d input");
  const std::size_t expected = spec.kernel * x.dim(2) * spec.filters;
  if (weights.size() != expected) {
    throw DimensionError("conv1d weights: " + dims(weights.size(), expected));
  }
  if (bias_size != 0 && bias_size != spec.filters) {
    throw DimensionError("conv1d bias: " + dims(bias_size, spec.filters));
  }
}

}  // namespace

void ConvSpec::validate() const {
  if (filters == 0 || kernel == 0 || stride == 0) {
    throw DimensionError("conv spec requires filters, kernel and stride >= 1");
  }
}

std::size_t ConvSpec::output_length(std::size_t t) const {
  const std::size_t padded = t + pad_left + pad_right;
  if (kernel > padded) {
    throw DimensionError("conv1d kernel " + std::to_string(kernel) +
                         " longer than padded input " + std::to_string(padded));
  }
  return (padded - kernel) / stride + 1;
}

template <typename T>
Tensor<T> conv1d_forward(const Tensor<T>& x, const ConvSpec& spec,
                         std::span<const T> weights, std::span<const T> bias) {
  check_conv_params(x, spec, weights, bias.size());
  const std::size_t batch = x.dim(0), t_in = x.dim(1), c_in = x.dim(2);
  const std::size_t t_out = spec.output_length(t_in);
  const std::size_t t_pad = t_in + spec.pad_left + spec.pad_right;

  std::vector<T> padded;
  const T* src = x.data();
  if (spec.pad_left || spec.pad_right) {
    padded = pad_time(x, spec.pad_left, spec.pad_right);
    src = padded.data();
  }
  const auto offsets = window_offsets(batch, t_out, t_pad, c_in, spec.stride);

  Tensor<T> y({batch, t_out, spec.filters});
  const kernels::MatRef<T> a{src, 0, 1, offsets.data(), nullptr};
  kernels::gemm(batch * t_out, spec.filters, spec.kernel * c_in, a,
                kernels::row_major(weights.data(), spec.filters), y.data(),
                spec.filters, false);
  if (!bias.empty()) {
    for (std::size_t r = 0; r < batch * t_out; ++r) {
      T* row = y.data() + r * spec.filters;
      for (std::size_t f = 0; f < spec.filters; ++f) row[f] += bias[f];
    }
  }
  return y;
}

template <typename T>
void conv1d_backward(const Tensor<T>& x, const ConvSpec& spec,
                     std::span<const T> weights, const Tensor<T>& dy,
                     Tensor<T>* dx, std::span<T> dweights, std::span<T> dbias) {
  check_conv_params(x, spec, weights, 0);
  const std::size_t batch = x.dim(0), t_in = x.dim(1), c_in = x.dim(2);
  const std::size_t t_out = spec.output_length(t_in);
  const std::size_t t_pad = t_in + spec.pad_left + spec.pad_right;
  const std::size_t rows = batch * t_out;
  const std::size_t window = spec.kernel * c_in;
  require_rank(dy, 3, "conv1d output gradient");
  if (dy.dim(0) != batch || dy.dim(1) != t_out || dy.dim(2) != spec.filters) {
    throw DimensionError("conv1d output gradient shape " + shape_string(dy.shape()));
  }
  const auto offsets = window_offsets(batch, t_out, t_pad, c_in, spec.stride);

  if (!dbias.empty()) {
    if (dbias.size() != spec.filters) throw DimensionError("conv1d dbias size");
    std::fill(dbias.begin(), dbias.end(), T(0));
    for (std::size_t r = 0; r < rows; ++r) {
      const T* row = dy.data() + r * spec.filters;
      for (std::size_t f = 0; f < spec.filters; ++f) dbias[f] += row[f];
    }
  }

  if (!dweights.empty()) {
    if (dweights.size() != weights.size()) throw DimensionError("conv1d dweights size");
    std::vector<T> padded;
    const T* src = x.data();
    if (spec.pad_left || spec.pad_right) {
      padded = pad_time(x, spec.pad_left, spec.pad_right);
      src = padded.data();
    }
    // dW = windows^T * dy; the transposed window matrix reuses the offsets as
    // column offsets.
    const kernels::MatRef<T> at{src, 1, 0, nullptr, offsets.data()};
    kernels::gemm(window, spec.filters, rows, at,
                  kernels::row_major(dy.data(), spec.filters), dweights.data(),
                  spec.filters, false);
  }

  if (dx != nullptr) {
    // Window gradients dy * W^T, scattered back onto overlapping windows.
    const std::unique_ptr<T[]> dwin(new T[rows * window]);
    kernels::gemm(rows, window, spec.filters,
                  kernels::row_major(dy.data(), spec.filters),
                  kernels::transposed(weights.data(), spec.filters), dwin.get(),
                  window, false);
    std::vector<T> dpad(batch * t_pad * c_in, T(0));
    for (std::size_t r = 0; r < rows; ++r) {
      T* dst = dpad.data() + offsets[r];
      const T* g = dwin.get() + r * window;
      for (std::size_t i = 0; i < window; ++i) dst[i] += g[i];
    }
    *dx = Tensor<T>({batch, t_in, c_in});
    for (std::size_t b = 0; b < batch; ++b) {
      const T* from = dpad.data() + (b * t_pad + spec.pad_left) * c_in;
      std::copy(from, from + t_in * c_in, dx->data() + b * t_in * c_in);
    }
  }
}

template <typename T>
Tensor<T> batchnorm_forward_train(const Tensor<T>& x, std::span<const T> gamma,
                                  std::span<const T> beta, std::span<T> running_mean,
                                  std::span<T> running_var, BatchNormCache<T>* cache) {
  require_rank(x, 3, "batchnorm input");
  const std::size_t c = x.dim(2);
  const std::size_t n = x.dim(0) * x.dim(1);
  if (gamma.size() != c || beta.size() != c || running_mean.size() != c ||
      running_var.size() != c) {
    throw DimensionError("batchnorm parameters do not match " + std::to_string(c) + " channels");
  }
  std::vector<double> mean(c, 0.0), var(c, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    const T* row = x.data() + r * c;
    for (std::size_t j = 0; j < c; ++j) mean[j] += row[j];
  }
  for (auto& m : mean) m /= static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r) {
    const T* row = x.data() + r * c;
    for (std::size_t j = 0; j < c; ++j) {
      const double d = row[j] - mean[j];
      var[j] += d * d;
    }
  }
  for (auto& v : var) v /= static_cast<double>(n);

  std::vector<T> inv_std(c);
  for (std::size_t j = 0; j < c; ++j) {
    inv_std[j] = static_cast<T>(1.0 / std::sqrt(var[j] + kBatchNormEpsilon));
    const double unbiased = n > 1 ? var[j] * n / (n - 1) : var[j];
    running_mean[j] = static_cast<T>(kBatchNormMomentum * running_mean[j] +
                                     (1.0 - kBatchNormMomentum) * mean[j]);
    running_var[j] = static_cast<T>(kBatchNormMomentum * running_var[j] +
                                    (1.0 - kBatchNormMomentum) * unbiased);
  }

  Tensor<T> y(x.shape());
  Tensor<T> x_hat(x.shape());
  for (std::size_t r = 0; r < n; ++r) {
    const T* row = x.data() + r * c;
    T* h = x_hat.data() + r * c;
    T* out = y.data() + r * c;
    for (std::size_t j = 0; j < c; ++j) {
      h[j] = static_cast<T>((row[j] - mean[j]) * inv_std[j]);
      out[j] = gamma[j] * h[j] + beta[j];
    }
  }
  if (cache != nullptr) {
    cache->x_hat = std::move(x_hat);
    cache->inv_std = std::move(inv_std);
  }
  return y;
}

template <typename T>
Tensor<T> batchnorm_forward_infer(const Tensor<T>& x, std::span<const T> gamma,
                                  std::span<const T> beta,
                                  std::span<const T> running_mean,
                                  std::span<const T> running_var) {
  require_rank(x, 3, "batchnorm input");
  const std::size_t c = x.dim(2);
  if (gamma.size() != c || beta.size() != c || running_mean.size() != c ||
      running_var.size() != c) {
    throw DimensionError("batchnorm parameters do not match " + std::to_string(c) + " channels");
  }
  std::vector<T> scale(c), shift(c);
  for (std::size_t j = 0; j < c; ++j) {
    const T inv = static_cast<T>(1.0 / std::sqrt(static_cast<double>(running_var[j]) +
                                                 kBatchNormEpsilon));
    scale[j] = gamma[j] * inv;
    shift[j] = beta[j] - running_mean[j] * scale[j];
  }
  Tensor<T> y(x.shape());
  const std::size_t n = x.dim(0) * x.dim(1);
  for (std::size_t r = 0; r < n; ++r) {
    const T* row = x.data() + r * c;
    T* out = y.data() + r * c;
    for (std::size_t j = 0; j < c; ++j) out[j] = row[j] * scale[j] + shift[j];
  }
  return y;
}

template <typename T>
Tensor<T> batchnorm_backward(const Tensor<T>& dy, const BatchNormCache<T>& cache,
                             std::span<const T> gamma, std::span<T> dgamma,
                             std::span<T> dbeta) {
  const std::size_t c = dy.dim(2);
  const std::size_t n = dy.dim(0) * dy.dim(1);
  std::vector<double> sum_dy(c, 0.0), sum_dy_xhat(c, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    const T* g = dy.data() + r * c;
    const T* h = cache.x_hat.data() + r * c;
    for (std::size_t j = 0; j < c; ++j) {
      sum_dy[j] += g[j];
      sum_dy_xhat[j] += static_cast<double>(g[j]) * h[j];
    }
  }
  if (!dgamma.empty()) {
    for (std::size_t j = 0; j < c; ++j) dgamma[j] = static_cast<T>(sum_dy_xhat[j]);
  }
  if (!dbeta.empty()) {
    for (std::size_t j = 0; j < c; ++j) dbeta[j] = static_cast<T>(sum_dy[j]);
  }
  // dx = gamma * inv_std / n * (n * dy - sum(dy) - x_hat * sum(dy * x_hat))
  Tensor<T> dx(dy.shape());
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<T> k(c), mean_dy(c), mean_dyh(c);
  for (std::size_t j = 0; j < c; ++j) {
    k[j] = gamma[j] * cache.inv_std[j];
    mean_dy[j] = static_cast<T>(sum_dy[j] * inv_n);
    mean_dyh[j] = static_cast<T>(sum_dy_xhat[j] * inv_n);
  }
  for (std::size_t r = 0; r < n; ++r) {
    const T* g = dy.data() + r * c;
    const T* h = cache.x_hat.data() + r * c;
    T* out = dx.data() + r * c;
    for (std::size_t j = 0; j < c; ++j) {
      out[j] = k[j] * (g[j] - mean_dy[j] - h[j] * mean_dyh[j]);
    }
  }
  return dx;
}

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& x) {
  Tensor<T> y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
  return y;
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& x, const Tensor<T>& dy) {
  if (x.size() != dy.size()) throw DimensionError("relu gradient size mismatch");
  Tensor<T> dx(x.shape());
  using Bits = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  const T* xs = x.data();
  const T* g = dy.data();
  T* out = dx.data();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const Bits keep = Bits(0) - static_cast<Bits>(xs[i] > T(0));
    out[i] = std::bit_cast<T>(std::bit_cast<Bits>(g[i]) & keep);
  }
  return dx;
}

template <typename T>
Tensor<T> global_avg_pool_forward(const Tensor<T>& x) {
  require_rank(x, 3, "pool input");
  const std::size_t b = x.dim(0), t = x.dim(1), c = x.dim(2);
  Tensor<T> y({b, c});
  const T inv_t = T(1) / static_cast<T>(t);
  for (std::size_t i = 0; i < b; ++i) {
    T* out = y.data() + i * c;
    for (std::size_t s = 0; s < t; ++s) {
      const T* row = x.data() + (i * t + s) * c;
      for (std::size_t j = 0; j < c; ++j) out[j] += row[j];
    }
    for (std::size_t j = 0; j < c; ++j) out[j] *= inv_t;
  }
  return y;
}

template <typename T>
Tensor<T> global_avg_pool_backward(const Tensor<T>& dy, std::size_t time) {
  require_rank(dy, 2, "pool gradient");
  const std::size_t b = dy.dim(0), c = dy.dim(1);
  Tensor<T> dx({b, time, c});
  const T inv_t = T(1) / static_cast<T>(time);
  for (std::size_t i = 0; i < b; ++i) {
    const T* g = dy.data() + i * c;
    for (std::size_t s = 0; s < time; ++s) {
      T* out = dx.data() + (i * time + s) * c;
      for (std::size_t j = 0; j < c; ++j) out[j] = g[j] * inv_t;
    }
  }
  return dx;
}

template <typename T>
Tensor<T> linear_forward(const Tensor<T>& x, std::span<const T> weights,
                         std::span<const T> bias, std::size_t out_features) {
  require_rank(x, 2, "linear input");
  const std::size_t b = x.dim(0), d = x.dim(1);
  if (weights.size() != d * out_features) {
    throw DimensionError("linear weights: " + dims(weights.size(), d * out_features));
  }
  if (!bias.empty() && bias.size() != out_features) {
    throw DimensionError("linear bias: " + dims(bias.size(), out_features));
  }
  Tensor<T> y({b, out_features});
  kernels::gemm(b, out_features, d, kernels::row_major(x.data(), d),
                kernels::row_major(weights.data(), out_features), y.data(),
                out_features, false);
  if (!bias.empty()) {
    for (std::size_t i = 0; i < b; ++i) {
      for (std::size_t j = 0; j < out_features; ++j) y[i * out_features + j] += bias[j];
    }
  }
  return y;
}

template <typename T>
void linear_backward(const Tensor<T>& x, std::span<const T> weights,
                     const Tensor<T>& dy, Tensor<T>* dx, std::span<T> dweights,
                     std::span<T> dbias) {
  const std::size_t b = x.dim(0), d = x.dim(1), n = dy.dim(1);
  if (dy.dim(0) != b || weights.size() != d * n) {
    throw DimensionError("linear gradient shape mismatch");
  }
  if (!dweights.empty()) {
    kernels::gemm(d, n, b, kernels::transposed(x.data(), d),
                  kernels::row_major(dy.data(), n), dweights.data(), n, false);
  }
  if (!dbias.empty()) {
    std::fill(dbias.begin(), dbias.end(), T(0));
    for (std::size_t i = 0; i < b; ++i) {
      for (std::size_t j = 0; j < n; ++j) dbias[j] += dy[i * n + j];
    }
  }
  if (dx != nullptr) {
    *dx = Tensor<T>({b, d});
    kernels::gemm(b, d, n, kernels::row_major(dy.data(), n),
                  kernels::transposed(weights.data(), n), dx->data(), d, false);
  }
}

#define RESTCN_INSTANTIATE_LAYERS(T)                                                 \
  template Tensor<T> conv1d_forward(const Tensor<T>&, const ConvSpec&,               \
                                    std::span<const T>, std::span<const T>);         \
  template void conv1d_backward(const Tensor<T>&, const ConvSpec&,                   \
                                std::span<const T>, const Tensor<T>&, Tensor<T>*,    \
                                std::span<T>, std::span<T>);                         \
  template Tensor<T> batchnorm_forward_train(const Tensor<T>&, std::span<const T>,   \
                                             std::span<const T>, std::span<T>,       \
                                             std::span<T>, BatchNormCache<T>*);      \
  template Tensor<T> batchnorm_forward_infer(const Tensor<T>&, std::span<const T>,   \
                                             std::span<const T>, std::span<const T>, \
                                             std::span<const T>);                    \
  template Tensor<T> batchnorm_backward(const Tensor<T>&, const BatchNormCache<T>&,  \
                                        std::span<const T>, std::span<T>,            \
                                        std::span<T>);                               \
  template Tensor<T> relu_forward(const Tensor<T>&);                                 \
  template Tensor<T> relu_backward(const Tensor<T>&, const Tensor<T>&);              \
  template Tensor<T> global_avg_pool_forward(const Tensor<T>&);                      \
  template Tensor<T> global_avg_pool_backward(const Tensor<T>&, std::size_t);        \
  template Tensor<T> linear_forward(const Tensor<T>&, std::span<const T>,            \
                                    std::span<const T>, std::size_t);                \
  template void linear_backward(const Tensor<T>&, std::span<const T>,                \
                                const Tensor<T>&, Tensor<T>*, std::span<T>,          \
                                std::span<T>);

RESTCN_INSTANTIATE_LAYERS(float)
RESTCN_INSTANTIATE_LAYERS(double)

#undef RESTCN_INSTANTIATE_LAYERS

}  // namespace restcn::nn
