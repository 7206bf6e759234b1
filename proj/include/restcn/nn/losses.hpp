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

// Probability heads and losses. These run on per-sample logit vectors of a
// handful of classes, so they are double precision regardless of the
// precision the network trains in.

#ifndef RESTCN_NN_LOSSES_HPP_
#define RESTCN_NN_LOSSES_HPP_

#include <cstddef>
#include <span>
#include <vector>

namespace restcn::nn {

// Probabilities below this are clamped before taking logs.
inline constexpr double kProbabilityFloor = 1e-12;

struct SoftenedDistribution {
  std::vector<double> probs;
  double temperature = 1.0;
};

// exp(z_i / T) / sum_j exp(z_j / T), evaluated after subtracting max(z).
// Throws DomainError for T <= 0 or non-finite logits.
SoftenedDistribution tempered_softmax(std::span<const double> logits, double temperature);
std::vector<double> softmax(std::span<const double> logits);

// -log(probs[label]).
double cross_entropy(std::span<const double> probs, std::size_t label);

struct LossWithGradient {
  double loss = 0.0;
  std::vector<double> grad;  // d loss / d logits
};

// Plain (T = 1) softmax followed by cross-entropy; grad = softmax - onehot.
LossWithGradient softmax_cross_entropy(std::span<const double> logits, std::size_t label);

struct KlResult {
  double value = 0.0;
  bool clamped = false;  // some q_i was below kProbabilityFloor
};

// KL(p || q) = sum_i p_i log(p_i / q_i). Terms with p_i = 0 contribute 0.
KlResult kl_divergence(std::span<const double> p, std::span<const double> q);

// Gradient of KL(target || tempered_softmax(logits, T)) with respect to the
// logits, the target held constant: (q - target) / T.
std::vector<double> kl_gradient_wrt_logits(std::span<const double> target,
                                           std::span<const double> q,
                                           double temperature);

}  // namespace restcn::nn

#endif  // RESTCN_NN_LOSSES_HPP_
