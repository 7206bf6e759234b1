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

#include "restcn/reasoning/risk.hpp"

#include <cmath>
#include <string>

#include "restcn/common/error.hpp"

namespace restcn::reasoning {
namespace {

void check_fraction(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw DomainError(std::string(name) + " must be in [0, 1], got " + std::to_string(v));
  }
}

void check_finite(double v, const char* name) {
  if (!std::isfinite(v)) throw DomainError(std::string(name) + " must be finite");
}

}  // namespace

void ImpactCosts::validate() const {
  if (!(std::isfinite(alpha) && alpha >= 0.0) || !(std::isfinite(beta) && beta >= 0.0)) {
    throw DomainError("impact costs must be finite and >= 0");
  }
}

RiskProfile risk_error(const ImpactCosts& costs, double sensitivity, double specificity) {
  costs.validate();
  check_fraction(sensitivity, "sensitivity");
  check_fraction(specificity, "specificity");
  RiskProfile p;
  p.costs = costs;
  p.errors = {1.0 - sensitivity, 1.0 - specificity};
  p.risk = costs.alpha * p.errors.fnmr + costs.beta * p.errors.fmr;
  return p;
}

RiskProfile risk_error(const ImpactCosts& costs, const eval::MetricsReport& metrics) {
  return risk_error(costs, metrics.sensitivity, metrics.specificity);
}

double bias_risk(double risk_i, double risk_j) {
  check_finite(risk_i, "risk_i");
  check_finite(risk_j, "risk_j");
  return risk_i - risk_j;
}

double bias_reliability(double rel_j, double rel_i) {
  check_fraction(rel_j, "rel_j");
  check_fraction(rel_i, "rel_i");
  return rel_j - rel_i;
}

double trust(double reliability, double risk) {
  check_fraction(reliability, "reliability");
  if (!(risk >= 0.0) || !std::isfinite(risk)) throw DomainError("risk must be finite and >= 0");
  return reliability / (1.0 + risk);
}

double flu_probability(double p_cough, double p_sneeze) {
  check_fraction(p_cough, "p_cough");
  check_fraction(p_sneeze, "p_sneeze");
  return 0.5 * (p_cough + p_sneeze);
}

FluAssessment risk_adjusted_flu(double p_flu, double risk) {
  check_fraction(p_flu, "p_flu");
  if (!(risk >= 0.0) || !std::isfinite(risk)) throw DomainError("risk must be finite and >= 0");
  FluAssessment a;
  a.risk = risk;
  a.p_flu_base = p_flu;
  a.p_flu_adjusted = p_flu / (1.0 + risk);
  return a;
}

FluAssessment assess_flu(double p_cough, double p_sneeze, double risk) {
  FluAssessment a = risk_adjusted_flu(flu_probability(p_cough, p_sneeze), risk);
  a.p_cough = p_cough;
  a.p_sneeze = p_sneeze;
  return a;
}

}  // namespace restcn::reasoning
