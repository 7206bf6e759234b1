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

// Confusion matrices, accuracy / precision / sensitivity / specificity, and
// per-cohort evaluation.

#ifndef RESTCN_EVAL_METRICS_HPP_
#define RESTCN_EVAL_METRICS_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "restcn/data/dataset.hpp"

namespace restcn::eval {

// Rows are ground truth, columns are predictions.
struct ConfusionMatrix {
  std::size_t n_classes = 0;
  std::vector<std::vector<std::uint64_t>> counts;

  explicit ConfusionMatrix(std::size_t n = 0)
      : n_classes(n), counts(n, std::vector<std::uint64_t>(n, 0)) {}

  std::uint64_t total() const;
  std::uint64_t trace() const;
  std::uint64_t row_sum(std::size_t truth) const;
  std::uint64_t col_sum(std::size_t pred) const;
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

// Throws DomainError on unequal lengths or labels outside [0, n).
ConfusionMatrix confusion_matrix(std::span<const std::size_t> predictions,
                                 std::span<const std::size_t> truths, std::size_t n);

struct BinaryCounts {
  std::uint64_t tp = 0, tn = 0, fp = 0, fn = 0;
};

struct MetricsReport {
  double accuracy = 0.0;
  double precision = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
  // Classes left out of the macro means. A class with no positives is left
  // out of both; one with no negatives only out of specificity.
  std::vector<std::size_t> skipped_sensitivity;
  std::vector<std::size_t> skipped_specificity;
  // Binary ratios whose denominator was zero; reported as 0.
  std::vector<std::string> undefined;
};

MetricsReport metrics_from_counts(const BinaryCounts& c);

// Two classes: class 1 is the positive class and the binary formulas apply.
// More classes: accuracy = trace / total, precision is micro-averaged (and
// therefore equals accuracy), sensitivity and specificity are macro
// one-vs-rest averages. Throws DomainError on an empty matrix.
MetricsReport metrics_from_cm(const ConfusionMatrix& cm);

// Reliability of a decision condition is its rank-1 accuracy.
inline double reliability(const MetricsReport& m) { return m.accuracy; }

struct CohortEntry {
  data::Attribute attribute = data::Attribute::kView;
  std::string value;
  std::size_t samples = 0;
  // No samples: metrics and confusion matrix are not meaningful.
  bool absent = true;
  ConfusionMatrix confusion;
  std::optional<MetricsReport> metrics;
};

struct CohortReport {
  std::size_t total = 0;
  ConfusionMatrix confusion;
  MetricsReport baseline;
  std::vector<CohortEntry> cohorts;  // attribute order, then value order

  const CohortEntry* find(data::Attribute a, std::string_view value) const;
};

CohortReport cohort_eval(std::span<const std::size_t> predictions,
                         std::span<const std::size_t> truths,
                         std::span<const data::Attributes> attributes, std::size_t n_classes,
                         std::span<const data::Attribute> cohort_attributes);

}  // namespace restcn::eval

#endif  // RESTCN_EVAL_METRICS_HPP_
