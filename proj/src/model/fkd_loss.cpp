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

#include "restcn/model/fkd_loss.hpp"

#include <string>

#include "restcn/common/error.hpp"
#include "restcn/nn/losses.hpp"

namespace restcn::model {
namespace {

template <typename T>
std::vector<double> row(const nn::Tensor<T>& logits, std::size_t i) {
  const std::size_t n = logits.dim(1);
  return std::vector<double>(logits.data() + i * n, logits.data() + (i + 1) * n);
}

template <typename T>
void write_row(nn::Tensor<T>& dst, std::size_t i, const std::vector<double>& g, double scale) {
  const std::size_t n = dst.dim(1);
  for (std::size_t c = 0; c < n; ++c) dst.data()[i * n + c] = static_cast<T>(g[c] * scale);
}

}  // namespace

double LossBreakdown::mean_fkd() const {
  if (block_fkd.empty()) return 0.0;
  double s = 0.0;
  for (double v : block_fkd) s += v;
  return s / static_cast<double>(block_fkd.size());
}

template <typename T>
LossResult<T> compute_losses(const HeadOutputs<T>& outputs, std::span<const std::size_t> labels,
                             double distill_temperature) {
  const nn::Tensor<T>& fusion = outputs.fusion_logits;
  nn::require_rank(fusion, 2, "fusion logits");
  const std::size_t batch = fusion.dim(0);
  const std::size_t n_classes = fusion.dim(1);
  const std::size_t n_blocks = outputs.block_logits.size();
  if (batch == 0 || labels.size() != batch) {
    throw DimensionError("loss: " + std::to_string(labels.size()) + " labels for a batch of " +
                         std::to_string(batch));
  }
  for (const auto& b : outputs.block_logits) {
    if (b.shape() != fusion.shape()) throw DimensionError("loss: head logit shapes differ");
  }
  for (std::size_t y : labels) {
    if (y >= n_classes) throw DomainError("loss: label " + std::to_string(y) + " out of range");
  }

  LossResult<T> result;
  LossBreakdown& lb = result.breakdown;
  lb.block_ce.assign(n_blocks, 0.0);
  lb.block_fkd.assign(n_blocks, 0.0);
  lb.block_total.assign(n_blocks, 0.0);
  result.grads.fusion_logits = nn::Tensor<T>(fusion.shape());
  result.grads.block_logits.assign(n_blocks, nn::Tensor<T>(fusion.shape()));
  const double inv_b = 1.0 / static_cast<double>(batch);

  for (std::size_t i = 0; i < batch; ++i) {
    const std::vector<double> zf = row(fusion, i);
    const auto target = nn::tempered_softmax(zf, distill_temperature);
    const auto fce = nn::softmax_cross_entropy(zf, labels[i]);
    lb.fusion += fce.loss;
    write_row(result.grads.fusion_logits, i, fce.grad, inv_b);

    for (std::size_t m = 0; m < n_blocks; ++m) {
      const std::vector<double> zm = row(outputs.block_logits[m], i);
      const auto ce = nn::softmax_cross_entropy(zm, labels[i]);
      const auto student = nn::tempered_softmax(zm, distill_temperature);
      const auto kl = nn::kl_divergence(target.probs, student.probs);
      lb.kl_clamped = lb.kl_clamped || kl.clamped;
      lb.block_ce[m] += ce.loss;
      lb.block_fkd[m] += kl.value;
      std::vector<double> g =
          nn::kl_gradient_wrt_logits(target.probs, student.probs, distill_temperature);
      for (std::size_t c = 0; c < n_classes; ++c) g[c] += ce.grad[c];
      write_row(result.grads.block_logits[m], i, g, inv_b);
    }
  }

  lb.fusion *= inv_b;
  for (std::size_t m = 0; m < n_blocks; ++m) {
    lb.block_ce[m] *= inv_b;
    lb.block_fkd[m] *= inv_b;
    lb.block_total[m] = lb.block_ce[m] + lb.block_fkd[m];
    lb.total += lb.block_total[m];
  }
  lb.total += lb.fusion;
  return result;
}

template LossResult<float> compute_losses(const HeadOutputs<float>&, std::span<const std::size_t>,
                                          double);
template LossResult<double> compute_losses(const HeadOutputs<double>&,
                                           std::span<const std::size_t>, double);

}  // namespace restcn::model
