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

#include "restcn/nn/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "restcn/common/error.hpp"

namespace restcn::nn {

SoftenedDistribution tempered_softmax(std::span<const double> logits, double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw DomainError("softmax temperature must be positive, got " + std::to_string(temperature));
  }
  if (logits.empty()) throw DomainError("softmax of an empty logit vector");
  double top = logits[0];
  for (double z : logits) {
    if (!std::isfinite(z)) throw DomainError("non-finite logit");
    top = std::max(top, z);
  }
  SoftenedDistribution out;
  out.temperature = temperature;
  out.probs.resize(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out.probs[i] = std::exp((logits[i] - top) / temperature);
    total += out.probs[i];
  }
  for (double& p : out.probs) p /= total;
  return out;
}

std::vector<double> softmax(std::span<const double> logits) {
  return tempered_softmax(logits, 1.0).probs;
}

double cross_entropy(std::span<const double> probs, std::size_t label) {
  if (label >= probs.size()) {
    throw DomainError("label " + std::to_string(label) + " out of range");
  }
  return -std::log(std::max(probs[label], kProbabilityFloor));
}

LossWithGradient softmax_cross_entropy(std::span<const double> logits, std::size_t label) {
  LossWithGradient out;
  out.grad = softmax(logits);
  out.loss = cross_entropy(out.grad, label);
  out.grad[label] -= 1.0;
  return out;
}

KlResult kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw DomainError("KL between distributions of different size");
  KlResult out;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    double qi = q[i];
    if (qi < kProbabilityFloor) {
      qi = kProbabilityFloor;
      out.clamped = true;
    }
    out.value += p[i] * std::log(p[i] / qi);
  }
  // Rounding can leave tiny negative sums for p ~= q.
  out.value = std::max(out.value, 0.0);
  return out;
}

std::vector<double> kl_gradient_wrt_logits(std::span<const double> target,
                                           std::span<const double> q,
                                           double temperature) {
  if (target.size() != q.size()) throw DomainError("KL gradient size mismatch");
  std::vector<double> g(q.size());
  double target_mass = 0.0;
  for (double t : target) target_mass += t;
  for (std::size_t i = 0; i < q.size(); ++i) {
    g[i] = (target_mass * q[i] - target[i]) / temperature;
  }
  return g;
}

}  // namespace restcn::nn
