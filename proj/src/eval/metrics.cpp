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

#include "restcn/eval/metrics.hpp"

#include <string>

#include "restcn/common/error.hpp"

namespace restcn::eval {

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t s = 0;
  for (const auto& r : counts) {
    for (auto v : r) s += v;
  }
  return s;
}

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t s = 0;
  for (std::size_t i = 0; i < n_classes; ++i) s += counts[i][i];
  return s;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t truth) const {
  std::uint64_t s = 0;
  for (auto v : counts.at(truth)) s += v;
  return s;
}

std::uint64_t ConfusionMatrix::col_sum(std::size_t pred) const {
  std::uint64_t s = 0;
  for (const auto& r : counts) s += r.at(pred);
  return s;
}

ConfusionMatrix confusion_matrix(std::span<const std::size_t> predictions,
                                 std::span<const std::size_t> truths, std::size_t n) {
  if (predictions.size() != truths.size()) {
    throw DomainError("confusion matrix: " + std::to_string(predictions.size()) +
                      " predictions vs " + std::to_string(truths.size()) + " truths");
  }
  ConfusionMatrix cm(n);
  for (std::size_t i = 0; i < truths.size(); ++i) {
    if (truths[i] >= n || predictions[i] >= n) {
      throw DomainError("confusion matrix: label out of range at index " + std::to_string(i));
    }
    ++cm.counts[truths[i]][predictions[i]];
  }
  return cm;
}

namespace {

double ratio(std::uint64_t num, std::uint64_t den, const char* name, MetricsReport& r) {
  if (den == 0) {
    r.undefined.emplace_back(name);
    return 0.0;
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

MetricsReport metrics_from_counts(const BinaryCounts& c) {
  MetricsReport r;
  const std::uint64_t total = c.tp + c.tn + c.fp + c.fn;
  if (total == 0) throw DomainError("metrics undefined: no samples");
  r.accuracy = ratio(c.tp + c.tn, total, "accuracy", r);
  r.precision = ratio(c.tp, c.tp + c.fp, "precision", r);
  r.sensitivity = ratio(c.tp, c.tp + c.fn, "sensitivity", r);
  r.specificity = ratio(c.tn, c.tn + c.fp, "specificity", r);
  return r;
}

MetricsReport metrics_from_cm(const ConfusionMatrix& cm) {
  const std::uint64_t total = cm.total();
  if (cm.n_classes == 0 || total == 0) throw DomainError("metrics undefined: empty confusion matrix");
  if (cm.n_classes == 2) {
    return metrics_from_counts(
        {cm.counts[1][1], cm.counts[0][0], cm.counts[0][1], cm.counts[1][0]});
  }
  MetricsReport r;
  r.accuracy = static_cast<double>(cm.trace()) / static_cast<double>(total);
  r.precision = r.accuracy;
  double sens = 0.0, spec = 0.0;
  std::size_t n_sens = 0, n_spec = 0;
  for (std::size_t c = 0; c < cm.n_classes; ++c) {
    const std::uint64_t pos = cm.row_sum(c);
    const std::uint64_t neg = total - pos;
    const std::uint64_t tp = cm.counts[c][c];
    const std::uint64_t fp = cm.col_sum(c) - tp;
    if (pos == 0) {
      r.skipped_sensitivity.push_back(c);
      r.skipped_specificity.push_back(c);
      continue;
    }
    sens += static_cast<double>(tp) / static_cast<double>(pos);
    ++n_sens;
    if (neg == 0) {
      r.skipped_specificity.push_back(c);
      continue;
    }
    spec += static_cast<double>(neg - fp) / static_cast<double>(neg);
    ++n_spec;
  }
  r.sensitivity = sens / static_cast<double>(n_sens);
  if (n_spec == 0) {
    r.undefined.emplace_back("specificity");
  } else {
    r.specificity = spec / static_cast<double>(n_spec);
  }
  return r;
}

const CohortEntry* CohortReport::find(data::Attribute a, std::string_view value) const {
  for (const auto& c : cohorts) {
    if (c.attribute == a && c.value == value) return &c;
  }
  return nullptr;
}

CohortReport cohort_eval(std::span<const std::size_t> predictions,
                         std::span<const std::size_t> truths,
                         std::span<const data::Attributes> attributes, std::size_t n_classes,
                         std::span<const data::Attribute> cohort_attributes) {
  if (attributes.size() != truths.size()) {
    throw DomainError("cohort_eval: every sample needs attributes");
  }
  CohortReport report;
  report.confusion = confusion_matrix(predictions, truths, n_classes);
  report.total = truths.size();
  report.baseline = metrics_from_cm(report.confusion);
  for (data::Attribute a : cohort_attributes) {
    for (const std::string& value : data::attribute_values(a)) {
      CohortEntry e;
      e.attribute = a;
      e.value = value;
      e.confusion = ConfusionMatrix(n_classes);
      for (std::size_t i = 0; i < truths.size(); ++i) {
        if (attributes[i].value(a) == value) ++e.confusion.counts[truths[i]][predictions[i]];
      }
      e.samples = static_cast<std::size_t>(e.confusion.total());
      e.absent = e.samples == 0;
      if (!e.absent) e.metrics = metrics_from_cm(e.confusion);
      report.cohorts.push_back(std::move(e));
    }
  }
  return report;
}

}  // namespace restcn::eval
