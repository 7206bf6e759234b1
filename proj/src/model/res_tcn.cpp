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

#include "restcn/model/res_tcn.hpp"

#include <cmath>
#include <random>

#include "restcn/common/error.hpp"

namespace restcn::model {
namespace {

Slot take(std::size_t& cursor, std::size_t size) {
  Slot s{cursor, size};
  cursor += size;
  return s;
}

template <typename T>
void add_inplace(nn::Tensor<T>& dst, const nn::Tensor<T>& src) {
  if (dst.size() != src.size()) {
    throw DimensionError("residual add: " + nn::shape_string(dst.shape()) + " vs " +
                         nn::shape_string(src.shape()));
  }
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

nn::ConvSpec projection_spec(const UnitLayout& unit) {
  return {unit.out_channels, 1, unit.conv.stride, 0, 0};
}

}  // namespace

void ModelConfig::validate() const {
  if (n_blocks == 0) throw DomainError("model needs at least one block");
  if (!reduced && n_blocks != 4) {
    throw DomainError("model has " + std::to_string(n_blocks) +
                      " blocks; the full network has 4 (set reduced for smaller variants)");
  }
  if (block_widths.size() != n_blocks || block_strides.size() != n_blocks) {
    throw DomainError("block_widths and block_strides must have n_blocks entries");
  }
  for (std::size_t b = 0; b < n_blocks; ++b) {
    if (block_widths[b] == 0 || block_strides[b] == 0) {
      throw DomainError("block widths and strides must be >= 1");
    }
  }
  if (subblocks_per_block == 0) throw DomainError("subblocks_per_block must be >= 1");
  if (kernel == 0) throw DomainError("kernel must be >= 1");
  if (n_classes < 2) throw DomainError("n_classes must be >= 2");
  if (input_dim == 0 || time_steps == 0) throw DomainError("input_dim and time_steps must be >= 1");
  if (!(distill_temperature > 0.0)) throw DomainError("distill_temperature must be > 0");
}

Layout make_layout(const ModelConfig& config) {
  config.validate();
  Layout layout;
  std::size_t p = 0;
  std::size_t s = 0;
  std::size_t channels = config.input_dim;
  std::size_t fused = 0;
  layout.blocks.resize(config.n_blocks);
  for (std::size_t b = 0; b < config.n_blocks; ++b) {
    for (std::size_t u = 0; u < config.subblocks_per_block; ++u) {
      UnitLayout unit;
      unit.in_channels = channels;
      unit.out_channels = config.block_widths[b];
      const std::size_t stride = u == 0 ? config.block_strides[b] : 1;
      unit.conv = nn::ConvSpec::same(unit.out_channels, config.kernel, stride);
      unit.bn_gamma = take(p, unit.in_channels);
      unit.bn_beta = take(p, unit.in_channels);
      unit.conv_weights = take(p, config.kernel * unit.in_channels * unit.out_channels);
      unit.conv_bias = take(p, unit.out_channels);
      if (unit.in_channels != unit.out_channels || stride != 1) {
        unit.projection = take(p, unit.in_channels * unit.out_channels);
      }
      unit.running_mean = take(s, unit.in_channels);
      unit.running_var = take(s, unit.in_channels);
      channels = unit.out_channels;
      layout.blocks[b].push_back(unit);
    }
    fused += channels;
  }
  for (std::size_t b = 0; b < config.n_blocks; ++b) {
    HeadLayout head;
    head.in_features = config.block_widths[b];
    head.weights = take(p, head.in_features * config.n_classes);
    head.bias = take(p, config.n_classes);
    layout.block_heads.push_back(head);
  }
  layout.fusion_head.in_features = fused;
  layout.fusion_head.weights = take(p, fused * config.n_classes);
  layout.fusion_head.bias = take(p, config.n_classes);
  layout.num_params = p;
  layout.num_stats = s;
  return layout;
}

template <typename T>
ResTcn<T>::ResTcn(ModelConfig config)
    : config_(std::move(config)),
      layout_(make_layout(config_)),
      params_(layout_.num_params, T(0)),
      stats_(layout_.num_stats, T(0)) {
  for (const auto& block : layout_.blocks) {
    for (const auto& unit : block) {
      std::fill_n(params_.begin() + static_cast<std::ptrdiff_t>(unit.bn_gamma.offset),
                  unit.bn_gamma.size, T(1));
      std::fill_n(stats_.begin() + static_cast<std::ptrdiff_t>(unit.running_var.offset),
                  unit.running_var.size, T(1));
    }
  }
}

template <typename T>
ResTcn<T> ResTcn<T>::init(const ModelConfig& config, std::uint64_t seed) {
  ResTcn<T> model(config);
  std::mt19937_64 rng(seed);
  auto fill = [&](Slot slot, std::size_t fan_in) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (T& w : model.param(slot)) w = static_cast<T>(dist(rng));
  };
  for (const auto& block : model.layout_.blocks) {
    for (const auto& unit : block) {
      fill(unit.conv_weights, unit.conv.kernel * unit.in_channels);
      if (unit.projection) fill(*unit.projection, unit.in_channels);
    }
  }
  for (const auto& head : model.layout_.block_heads) fill(head.weights, head.in_features);
  fill(model.layout_.fusion_head.weights, model.layout_.fusion_head.in_features);
  return model;
}

template <typename T>
void ResTcn<T>::check_input(const nn::Tensor<T>& batch) const {
  if (batch.rank() != 3 || batch.dim(1) != config_.time_steps ||
      batch.dim(2) != config_.input_dim || batch.dim(0) == 0) {
    throw DimensionError("model input must be [B>0, " + std::to_string(config_.time_steps) +
                         ", " + std::to_string(config_.input_dim) + "], got " +
                         nn::shape_string(batch.shape()));
  }
}

template <typename T>
template <bool kTrain>
HeadOutputs<T> ResTcn<T>::run_forward(const nn::Tensor<T>& batch, ForwardTrace<T>* trace,
                                      std::span<T> running) const {
  check_input(batch);
  const std::size_t n_blocks = config_.n_blocks;
  const std::size_t n_classes = config_.n_classes;
  const std::size_t batch_size = batch.dim(0);
  if (trace) {
    trace->units.assign(n_blocks, {});
    trace->block_time.assign(n_blocks, 0);
    trace->pooled.assign(n_blocks, {});
  }

  HeadOutputs<T> out;
  std::vector<nn::Tensor<T>> pooled(n_blocks);
  nn::Tensor<T> x = batch;
  for (std::size_t b = 0; b < n_blocks; ++b) {
    for (const auto& unit : layout_.blocks[b]) {
      typename ForwardTrace<T>::Unit cached;
      nn::Tensor<T> normed;
      if constexpr (kTrain) {
        normed = nn::batchnorm_forward_train<T>(
            x, param(unit.bn_gamma), param(unit.bn_beta),
            running.subspan(unit.running_mean.offset, unit.running_mean.size),
            running.subspan(unit.running_var.offset, unit.running_var.size),
            trace ? &cached.bn : nullptr);
      } else {
        const std::span<const T> st(stats_);
        normed = nn::batchnorm_forward_infer<T>(
            x, param(unit.bn_gamma), param(unit.bn_beta),
            st.subspan(unit.running_mean.offset, unit.running_mean.size),
            st.subspan(unit.running_var.offset, unit.running_var.size));
      }
      nn::Tensor<T> activated = nn::relu_forward(normed);
      nn::Tensor<T> y = nn::conv1d_forward<T>(activated, unit.conv, param(unit.conv_weights),
                                              param(unit.conv_bias));
      if (unit.projection) {
        add_inplace(y, nn::conv1d_forward<T>(x, projection_spec(unit), param(*unit.projection),
                                             std::span<const T>{}));
      } else {
        add_inplace(y, x);
      }
      if (trace) {
        cached.input = std::move(x);
        cached.activated = std::move(activated);
        trace->units[b].push_back(std::move(cached));
      }
      x = std::move(y);
    }
    pooled[b] = nn::global_avg_pool_forward(x);
    const auto& head = layout_.block_heads[b];
    out.block_logits.push_back(
        nn::linear_forward<T>(pooled[b], param(head.weights), param(head.bias), n_classes));
    if (trace) trace->block_time[b] = x.dim(1);
  }

  const auto& fusion = layout_.fusion_head;
  nn::Tensor<T> fused({batch_size, fusion.in_features});
  for (std::size_t i = 0; i < batch_size; ++i) {
    std::size_t col = 0;
    for (std::size_t b = 0; b < n_blocks; ++b) {
      const std::size_t w = pooled[b].dim(1);
      std::copy_n(pooled[b].data() + i * w, w, fused.data() + i * fusion.in_features + col);
      col += w;
    }
  }
  out.fusion_logits =
      nn::linear_forward<T>(fused, param(fusion.weights), param(fusion.bias), n_classes);
  if (trace) {
    trace->pooled = std::move(pooled);
    trace->fused = std::move(fused);
  }
  return out;
}

template <typename T>
HeadOutputs<T> ResTcn<T>::forward_infer(const nn::Tensor<T>& batch) const {
  return run_forward<false>(batch, nullptr, {});
}

template <typename T>
HeadOutputs<T> ResTcn<T>::forward_train(const nn::Tensor<T>& batch, ForwardTrace<T>* trace) {
  auto out = run_forward<true>(batch, trace, std::span<T>(stats_));
  calibrated_ = true;
  return out;
}

template <typename T>
void ResTcn<T>::backward(const ForwardTrace<T>& trace, const HeadOutputs<T>& dlogits,
                         std::span<T> grads) const {
  if (grads.size() != params_.size()) throw DimensionError("gradient arena size mismatch");
  if (trace.units.size() != config_.n_blocks || dlogits.block_logits.size() != config_.n_blocks) {
    throw DimensionError("backward needs one trace and one logit gradient per block");
  }
  std::fill(grads.begin(), grads.end(), T(0));
  auto grad = [&](Slot s) { return grads.subspan(s.offset, s.size); };
  const std::size_t n_blocks = config_.n_blocks;
  const std::size_t batch_size = trace.fused.dim(0);

  std::vector<nn::Tensor<T>> dpooled(n_blocks);
  for (std::size_t b = 0; b < n_blocks; ++b) {
    const auto& head = layout_.block_heads[b];
    nn::linear_backward<T>(trace.pooled[b], param(head.weights), dlogits.block_logits[b],
                           &dpooled[b], grad(head.weights), grad(head.bias));
  }
  const auto& fusion = layout_.fusion_head;
  nn::Tensor<T> dfused;
  nn::linear_backward<T>(trace.fused, param(fusion.weights), dlogits.fusion_logits, &dfused,
                         grad(fusion.weights), grad(fusion.bias));
  for (std::size_t i = 0; i < batch_size; ++i) {
    std::size_t col = 0;
    for (std::size_t b = 0; b < n_blocks; ++b) {
      const std::size_t w = dpooled[b].dim(1);
      T* dst = dpooled[b].data() + i * w;
      const T* src = dfused.data() + i * fusion.in_features + col;
      for (std::size_t j = 0; j < w; ++j) dst[j] += src[j];
      col += w;
    }
  }

  nn::Tensor<T> from_next;
  for (std::size_t b = n_blocks; b-- > 0;) {
    nn::Tensor<T> dh = nn::global_avg_pool_backward(dpooled[b], trace.block_time[b]);
    if (b + 1 < n_blocks) add_inplace(dh, from_next);
    const auto& units = layout_.blocks[b];
    for (std::size_t u = units.size(); u-- > 0;) {
      const auto& unit = units[u];
      const auto& cached = trace.units[b][u];
      const bool need_dx = b > 0 || u > 0;
      nn::Tensor<T> dact;
      nn::conv1d_backward<T>(cached.activated, unit.conv, param(unit.conv_weights), dh, &dact,
                             grad(unit.conv_weights), grad(unit.conv_bias));
      nn::Tensor<T> dnormed = nn::relu_backward(cached.activated, dact);
      nn::Tensor<T> dx = nn::batchnorm_backward<T>(dnormed, cached.bn, param(unit.bn_gamma),
                                                   grad(unit.bn_gamma), grad(unit.bn_beta));
      if (unit.projection) {
        nn::Tensor<T> dskip;
        nn::conv1d_backward<T>(cached.input, projection_spec(unit), param(*unit.projection), dh,
                               need_dx ? &dskip : nullptr, grad(*unit.projection), {});
        if (need_dx) add_inplace(dx, dskip);
      } else {
        add_inplace(dx, dh);
      }
      dh = std::move(dx);
    }
    from_next = std::move(dh);
  }
}

template class ResTcn<float>;
template class ResTcn<double>;

}  // namespace restcn::model
