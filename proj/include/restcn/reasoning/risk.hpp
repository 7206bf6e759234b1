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

// Risk, bias and trust scores, and the risk-penalized flu assessment.

#ifndef RESTCN_REASONING_RISK_HPP_
#define RESTCN_REASONING_RISK_HPP_

#include "restcn/eval/metrics.hpp"

namespace restcn::reasoning {

// alpha weighs a false non-match, beta a false match.
struct ImpactCosts {
  double alpha = 1.0;
  double beta = 1.0;

  void validate() const;
};

struct ErrorRates {
  double fnmr = 0.0;  // 1 - sensitivity
  double fmr = 0.0;   // 1 - specificity
};

struct RiskProfile {
  ImpactCosts costs;
  ErrorRates errors;
  double risk = 0.0;  // alpha * fnmr + beta * fmr
};

// Throws DomainError for costs or rates outside their ranges.
RiskProfile risk_error(const ImpactCosts& costs, double sensitivity, double specificity);
RiskProfile risk_error(const ImpactCosts& costs, const eval::MetricsReport& metrics);

// risk_i - risk_j. Positive when condition j carries less risk than i.
double bias_risk(double risk_i, double risk_j);

// rel_j - rel_i. Positive when condition j is more reliable than i.
double bias_reliability(double rel_j, double rel_i);

// Default trust score, reliability / (1 + risk): decreasing in risk,
// increasing in reliability. Any other monotone combination would do.
double trust(double reliability, double risk);

struct FluAssessment {
  double p_cough = 0.0;
  double p_sneeze = 0.0;
  double risk = 0.0;
  double p_flu_base = 0.0;
  double p_flu_adjusted = 0.0;  // p_flu_base / (1 + risk)
};

// Mean of the two symptom probabilities.
double flu_probability(double p_cough, double p_sneeze);

// Multiplicative penalty 1 / (1 + risk). Negative risk throws DomainError.
FluAssessment risk_adjusted_flu(double p_flu, double risk);

FluAssessment assess_flu(double p_cough, double p_sneeze, double risk);

}  // namespace restcn::reasoning

#endif  // RESTCN_REASONING_RISK_HPP_
