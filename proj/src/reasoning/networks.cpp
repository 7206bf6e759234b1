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

#include "restcn/reasoning/networks.hpp"

#include <algorithm>
#include <set>

#include "restcn/common/error.hpp"
#include "restcn/reasoning/risk.hpp"

namespace restcn::reasoning {
namespace {

using data::Attribute;

struct Rates {
  std::uint64_t predicted_positive = 0;
  std::uint64_t correct_positive = 0;
  std::uint64_t correct_negative = 0;
  std::uint64_t total = 0;
};

Rates rates(const eval::ConfusionMatrix& cm, const std::set<std::size_t>& positive) {
  Rates r;
  for (std::size_t t = 0; t < cm.n_classes; ++t) {
    for (std::size_t p = 0; p < cm.n_classes; ++p) {
      const std::uint64_t c = cm.counts[t][p];
      r.total += c;
      if (positive.count(p)) {
        r.predicted_positive += c;
        if (t == p) r.correct_positive += c;
      } else if (t == p) {
        r.correct_negative += c;
      }
    }
  }
  return r;
}

std::vector<double> yes_no(double p_yes) { return {p_yes, 1.0 - p_yes}; }

}  // namespace

BiasNetwork build_bias_network(const eval::CohortReport& report,
                               const std::vector<std::size_t>& positive_classes,
                               const BiasPriors& priors) {
  const std::set<std::size_t> positive(positive_classes.begin(), positive_classes.end());
  if (positive.empty()) throw DomainError("bias network: empty positive class set");
  for (std::size_t c : positive) {
    if (c >= report.confusion.n_classes) throw DomainError("bias network: positive class out of range");
  }
  const Rates base = rates(report.confusion, positive);
  if (base.total == 0) throw DomainError("bias network: empty cohort report");

  BiasNetwork out;
  const double base_rate =
      static_cast<double>(base.predicted_positive) / static_cast<double>(base.total);
  out.baseline_valid_rate = base_rate;

  // Multiplicative deviation of each attribute value from the baseline.
  auto deviations = [&](Attribute a) {
    std::vector<double> dev;
    for (const std::string& value : data::attribute_values(a)) {
      const eval::CohortEntry* e = report.find(a, value);
      const std::string tag = std::string(data::to_string(a)) + "=" + value;
      if (e == nullptr || e->absent) {
        out.flags.push_back(tag + " absent, baseline rate used");
        dev.push_back(1.0);
      } else if (base_rate == 0.0) {
        dev.push_back(1.0);
      } else {
        const Rates r = rates(e->confusion, positive);
        dev.push_back(static_cast<double>(r.predicted_positive) /
                      static_cast<double>(r.total) / base_rate);
      }
    }
    return dev;
  };
  const auto dg = deviations(Attribute::kGender);
  const auto dp = deviations(Attribute::kPose);
  const auto dv = deviations(Attribute::kView);

  auto root = [&](Attribute a, std::vector<double> prior) {
    BayesNode n;
    n.name = std::string(data::to_string(a));
    n.states = data::attribute_values(a);
    n.cpt = {std::move(prior)};
    out.net.add_node(std::move(n));
  };
  root(Attribute::kGender, {priors.gender.begin(), priors.gender.end()});
  root(Attribute::kPose, {priors.pose.begin(), priors.pose.end()});
  root(Attribute::kView, {priors.view.begin(), priors.view.end()});

  BayesNode valid;
  valid.name = "valid";
  valid.states = {"yes", "no"};
  valid.parents = {"gender", "pose", "view"};
  for (double g : dg) {
    for (double p : dp) {
      for (double v : dv) valid.cpt.push_back(yes_no(std::clamp(base_rate * g * p * v, 0.0, 1.0)));
    }
  }
  out.net.add_node(std::move(valid));

  const double accuracy = report.baseline.accuracy;
  auto match_rate = [&](std::uint64_t correct, std::uint64_t n, const char* side) {
    if (n == 0) {
      out.flags.push_back(std::string("no predicted ") + side + ", baseline accuracy used");
      return accuracy;
    }
    return static_cast<double>(correct) / static_cast<double>(n);
  };
  BayesNode match;
  match.name = "match";
  match.states = {"yes", "no"};
  match.parents = {"valid"};
  match.cpt = {yes_no(match_rate(base.correct_positive, base.predicted_positive, "positives")),
               yes_no(match_rate(base.correct_negative, base.total - base.predicted_positive,
                                 "negatives"))};
  out.net.add_node(std::move(match));
  return out;
}

DiscreteBayesNet build_flu_network(double p_cough, double p_sneeze) {
  flu_probability(p_cough, p_sneeze);  // range checks
  DiscreteBayesNet net;
  net.add_node({"cough", {"yes", "no"}, {}, {yes_no(p_cough)}});
  net.add_node({"sneeze", {"yes", "no"}, {}, {yes_no(p_sneeze)}});
  net.add_node({"flu",
                {"yes", "no"},
                {"cough", "sneeze"},
                {yes_no(1.0), yes_no(0.5), yes_no(0.5), yes_no(0.0)}});
  return net;
}

double infer_flu(double p_cough, double p_sneeze) {
  return build_flu_network(p_cough, p_sneeze).infer({}, "flu")[0];
}

}  // namespace restcn::reasoning
