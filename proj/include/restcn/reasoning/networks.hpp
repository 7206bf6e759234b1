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

// The two networks of the decision layer.
//
// Bias network: Gender, Pose and View are roots feeding Valid (the rank-1
// decision lands in the positive class set), which feeds Match (the decision
// is correct). P(Valid = yes | g, p, v) composes the cohort deviations from
// the baseline multiplicatively:
//
//     base * (r_g / base) * (r_p / base) * (r_v / base), clamped to [0, 1]
//
// where r_x is the predicted-positive rate of cohort x. Match depends only
// on Valid, with the exact-match rate among predicted positives and among
// predicted negatives, so P(Match = yes) reproduces the baseline accuracy.
//
// Flu network: Cough -> Flu <- Sneeze with P(Flu = yes | c, s) = ([c] + [s]) / 2,
// whose marginal is the mean of the symptom probabilities.

#ifndef RESTCN_REASONING_NETWORKS_HPP_
#define RESTCN_REASONING_NETWORKS_HPP_

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "restcn/eval/metrics.hpp"
#include "restcn/reasoning/bayes_net.hpp"

namespace restcn::reasoning {

struct BiasPriors {
  std::array<double, 2> gender = {0.60, 0.40};  // male, female
  std::array<double, 2> pose = {0.50, 0.50};    // stand, walk
  std::array<double, 3> view = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};  // left, center, right
};

struct BiasNetwork {
  DiscreteBayesNet net;
  double baseline_valid_rate = 0.0;
  // One entry per fallback taken, e.g. "view=center absent".
  std::vector<std::string> flags;
};

// `positive_classes` indexes the cohort report's confusion matrices.
BiasNetwork build_bias_network(const eval::CohortReport& report,
                               const std::vector<std::size_t>& positive_classes,
                               const BiasPriors& priors = {});

DiscreteBayesNet build_flu_network(double p_cough, double p_sneeze);

// P(Flu = yes) by inference on the flu network.
double infer_flu(double p_cough, double p_sneeze);

}  // namespace restcn::reasoning

#endif  // RESTCN_REASONING_NETWORKS_HPP_
