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

// Fusion knowledge distillation objective. Block head m is trained on
//
//     L_m = KL(softmax(z_f / T_d) || softmax(z_m / T_d)) + CE(softmax(z_m), y)
//
// and the fusion head on L_f = CE(softmax(z_f), y). The softened fusion
// distribution is a fixed target: no gradient reaches the fusion logits
// through the KL terms. Every term is a mean over the batch.

#ifndef RESTCN_MODEL_FKD_LOSS_HPP_
#define RESTCN_MODEL_FKD_LOSS_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "restcn/model/res_tcn.hpp"

namespace restcn::model {

struct LossBreakdown {
  std::vector<double> block_ce;     // CE_m
  std::vector<double> block_fkd;    // FKD_m
  std::vector<double> block_total;  // L_m = CE_m + FKD_m
  double fusion = 0.0;              // L_f
  double total = 0.0;               // sum_m L_m + L_f
  bool kl_clamped = false;

  double mean_fkd() const;
};

template <typename T>
struct LossResult {
  LossBreakdown breakdown;
  HeadOutputs<T> grads;  // d total / d logits, per head
};

template <typename T>
LossResult<T> compute_losses(const HeadOutputs<T>& outputs, std::span<const std::size_t> labels,
                             double distill_temperature);

}  // namespace restcn::model

#endif  // RESTCN_MODEL_FKD_LOSS_HPP_
