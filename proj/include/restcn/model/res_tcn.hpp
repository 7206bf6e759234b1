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

// Residual temporal convolutional network with one classifier head per
// residual block and a fusion head over all blocks.
//
// Each block stacks `subblocks_per_block` residual units
//
//     out = skip(x) + Conv(ReLU(BN(x)))
//
// where skip is the identity, or a strided 1x1 projection when the unit
// changes width or stride (the first unit of each block). A block head is
// global average pooling over time followed by a fully-connected layer; the
// fusion head is a fully-connected layer over the concatenated pooled
// features of every block.
//
// All trainable parameters live in one contiguous arena in declaration
// order (per unit: bn gamma, bn beta, conv weights, conv bias, projection;
// then block heads; then the fusion head). Batch-norm running statistics
// live in a second arena (per unit: mean, var).

#ifndef RESTCN_MODEL_RES_TCN_HPP_
#define RESTCN_MODEL_RES_TCN_HPP_

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "restcn/nn/layers.hpp"
#include "restcn/nn/tensor.hpp"

namespace restcn::model {

struct ModelConfig {
  std::size_t n_blocks = 4;
  std::size_t subblocks_per_block = 3;
  std::vector<std::size_t> block_widths = {32, 64, 128, 256};
  std::vector<std::size_t> block_strides = {1, 2, 2, 2};
  std::size_t kernel = 8;
  std::size_t n_classes = 8;
  std::size_t input_dim = 34;
  std::size_t time_steps = 64;
  double distill_temperature = 3.0;
  // Lifts the four-block requirement; used by verification configs.
  bool reduced = false;

  void validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct Slot {
  std::size_t offset = 0;
  std::size_t size = 0;
};

struct UnitLayout {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  nn::ConvSpec conv;
  Slot bn_gamma, bn_beta, conv_weights, conv_bias;
  std::optional<Slot> projection;  // [in_channels, out_channels]
  Slot running_mean, running_var;  // in the statistics arena
};

struct HeadLayout {
  std::size_t in_features = 0;
  Slot weights, bias;
};

struct Layout {
  std::vector<std::vector<UnitLayout>> blocks;
  std::vector<HeadLayout> block_heads;
  HeadLayout fusion_head;
  std::size_t num_params = 0;
  std::size_t num_stats = 0;
};

Layout make_layout(const ModelConfig& config);

// Logits of every head, each [batch, n_classes].
template <typename T>
struct HeadOutputs {
  std::vector<nn::Tensor<T>> block_logits;
  nn::Tensor<T> fusion_logits;
};

// Cached activations of a train-mode forward pass.
template <typename T>
struct ForwardTrace {
  struct Unit {
    nn::Tensor<T> input;
    nn::BatchNormCache<T> bn;
    nn::Tensor<T> activated;  // ReLU(BN(input)), the convolution input
  };
  std::vector<std::vector<Unit>> units;
  std::vector<std::size_t> block_time;  // output length of each block
  std::vector<nn::Tensor<T>> pooled;    // [batch, width] per block
  nn::Tensor<T> fused;                  // concatenated pooled features
};

template <typename T>
class ResTcn {
 public:
  explicit ResTcn(ModelConfig config);

  // Kaiming-uniform fan-in weights, zero biases, unit BN scale. Deterministic
  // in `seed`.
  static ResTcn init(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  const Layout& layout() const { return layout_; }

  std::span<T> params() { return params_; }
  std::span<const T> params() const { return params_; }
  std::span<T> stats() { return stats_; }
  std::span<const T> stats() const { return stats_; }
  std::span<T> param(Slot s) { return std::span<T>(params_).subspan(s.offset, s.size); }
  std::span<const T> param(Slot s) const {
    return std::span<const T>(params_).subspan(s.offset, s.size);
  }

  // False until a train-mode pass has populated the running statistics;
  // infer mode then normalizes with mean 0, var 1.
  bool batchnorm_calibrated() const { return calibrated_; }
  void set_batchnorm_calibrated(bool v) { calibrated_ = v; }

  // Input is [batch, time_steps, input_dim]. Pure; safe to call concurrently.
  HeadOutputs<T> forward_infer(const nn::Tensor<T>& batch) const;
  // Batch statistics; updates running statistics. Fills `trace` if given.
  HeadOutputs<T> forward_train(const nn::Tensor<T>& batch, ForwardTrace<T>* trace);

  // Writes d loss / d params into `grads` (size num_params), given the loss
  // gradient with respect to every head's logits.
  void backward(const ForwardTrace<T>& trace, const HeadOutputs<T>& dlogits,
                std::span<T> grads) const;

  template <typename U>
  ResTcn<U> cast() const {
    ResTcn<U> out(config_);
    std::copy(params_.begin(), params_.end(), out.params().begin());
    std::copy(stats_.begin(), stats_.end(), out.stats().begin());
    out.set_batchnorm_calibrated(calibrated_);
    return out;
  }

 private:
  // `running` is the statistics arena to update in train mode.
  template <bool kTrain>
  HeadOutputs<T> run_forward(const nn::Tensor<T>& batch, ForwardTrace<T>* trace,
                             std::span<T> running) const;
  void check_input(const nn::Tensor<T>& batch) const;

  ModelConfig config_;
  Layout layout_;
  std::vector<T> params_;
  std::vector<T> stats_;
  bool calibrated_ = false;
};

}  // namespace restcn::model

#endif  // RESTCN_MODEL_RES_TCN_HPP_
