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

// Pipeline glue shared by the CLI and the service: configuration files,
// evaluation of an artifact on a dataset, and the report document.

#ifndef RESTCN_APP_PIPELINE_HPP_
#define RESTCN_APP_PIPELINE_HPP_

#include <string>
#include <vector>

#include "json.hpp"
#include "restcn/data/dataset.hpp"
#include "restcn/eval/metrics.hpp"
#include "restcn/model/artifact.hpp"
#include "restcn/model/trainer.hpp"
#include "restcn/reasoning/risk.hpp"

namespace restcn::app {

using nlohmann::json;
using nlohmann::ordered_json;

// JSON config file:
//   {"model": {ModelConfig fields}, "train": {"epochs", "base_lr",
//    "batch_size", "seed"}, "cohorts": ["gender", "pose", "view"],
//    "costs": {"alpha", "beta"}, "positive_classes": ["cough", "sneeze"],
//    "port": 8080}
// Every key is optional. Unknown keys throw SchemaError.
struct AppConfig {
  model::ModelConfig model;
  bool model_n_classes_set = false;
  model::TrainConfig train;
  std::vector<data::Attribute> cohorts = {data::Attribute::kGender, data::Attribute::kPose,
                                          data::Attribute::kView};
  reasoning::ImpactCosts costs;
  std::vector<std::string> positive_classes;
  int port = 8080;

  void validate() const;
};

AppConfig app_config_from_json(const json& j);
AppConfig load_app_config(const std::string& path);

// Comma-separated attribute names; throws DomainError on an unknown name.
std::vector<data::Attribute> parse_cohort_list(const std::string& csv);

ordered_json history_to_json(const model::TrainHistory& history);

struct Evaluation {
  std::vector<std::size_t> predictions;
  std::vector<std::size_t> truths;
  eval::CohortReport cohorts;
};

// Dataset labels are matched to the artifact's classes by name; a class the
// model does not know throws DimensionError.
Evaluation evaluate(const model::Artifact& artifact, const data::Dataset& dataset,
                    const std::vector<data::Attribute>& cohort_attributes);

// Names given explicitly, else the classes named cough or sneeze, else
// class 0.
std::vector<std::size_t> resolve_positive_classes(const std::vector<std::string>& class_names,
                                                  const std::vector<std::string>& requested);

struct ReportInputs {
  eval::CohortReport cohorts;
  std::vector<std::string> class_names;
  reasoning::ImpactCosts costs;
  std::vector<std::size_t> positive_classes;
};

// Metrics, confusion matrices, per-cohort reliability, risk, trust and bias
// against the baseline with a positive/negative direction, the bias network,
// and a flu assessment when cough and sneeze classes exist.
ordered_json build_report(const ReportInputs& in);

// Recomputes every derived value in a report from the stored inputs and
// returns a description of each mismatch. Empty means self-consistent.
std::vector<std::string> verify_report(const json& report);

}  // namespace restcn::app

#endif  // RESTCN_APP_PIPELINE_HPP_
