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

#include "restcn/model/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "restcn/common/error.hpp"
#include "restcn/nn/losses.hpp"
#include "restcn/nn/optim.hpp"

namespace restcn::model {

nn::Tensor<float> FeatureSet::gather(std::span<const std::size_t> rows) const {
  const std::size_t t = inputs.dim(1);
  const std::size_t c = inputs.dim(2);
  nn::Tensor<float> out({rows.size(), t, c});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= size()) throw DimensionError("feature row out of range");
    std::copy_n(inputs.data() + rows[i] * t * c, t * c, out.data() + i * t * c);
  }
  return out;
}

FeatureSet make_features(const data::Dataset& dataset, std::size_t time_steps) {
  FeatureSet fs;
  const std::size_t stride = time_steps * data::kFeatureDim;
  fs.inputs = nn::Tensor<float>({dataset.size(), time_steps, data::kFeatureDim});
  fs.labels.reserve(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& s = dataset.samples[i];
    const std::vector<float> f = data::to_features(s.sequence, time_steps);
    std::copy(f.begin(), f.end(), fs.inputs.data() + i * stride);
    fs.labels.push_back(s.action);
  }
  return fs;
}

void TrainConfig::validate() const {
  if (!(base_lr > 0.0) || !std::isfinite(base_lr)) throw DomainError("base_lr must be > 0");
  if (batch_size == 0) throw DomainError("batch_size must be >= 1");
}

double EpochRecord::mean_fkd() const {
  if (block_fkd.empty()) return 0.0;
  return std::accumulate(block_fkd.begin(), block_fkd.end(), 0.0) /
         static_cast<double>(block_fkd.size());
}

std::size_t argmax(std::span<const double> values) {
  if (values.empty()) throw DomainError("argmax of an empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

namespace {

template <typename T>
std::vector<double> logit_row(const nn::Tensor<T>& logits, std::size_t i) {
  const std::size_t n = logits.dim(1);
  return std::vector<double>(logits.data() + i * n, logits.data() + (i + 1) * n);
}

bool all_finite(const HeadOutputs<float>& out) {
  auto finite = [](const nn::Tensor<float>& t) {
    return std::all_of(t.data(), t.data() + t.size(), [](float v) { return std::isfinite(v); });
  };
  return finite(out.fusion_logits) &&
         std::all_of(out.block_logits.begin(), out.block_logits.end(), finite);
}

void check_compatible(const ResTcn<float>& model, const FeatureSet& fs) {
  const auto& mc = model.config();
  if (mc.input_dim != data::kFeatureDim) {
    throw DimensionError("model input_dim " + std::to_string(mc.input_dim) + " but features have " +
                         std::to_string(data::kFeatureDim));
  }
  for (std::size_t y : fs.labels) {
    if (y >= mc.n_classes) {
      throw DimensionError("label " + std::to_string(y) + " but model has " +
                           std::to_string(mc.n_classes) + " classes");
    }
  }
}

struct Checkpoint {
  std::vector<float> params, stats;
  nn::AdamState<float> adam;
  bool calibrated = false;
};

}  // namespace

TrainHistory train(ResTcn<float>& model, const data::Dataset& train_set,
                   const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  TrainHistory history;
  if (config.epochs == 0) return history;
  if (train_set.empty()) throw DomainError("train set is empty");

  const ModelConfig& mc = model.config();
  const FeatureSet fs = make_features(train_set, mc.time_steps);
  check_compatible(model, fs);

  const std::size_t n = fs.size();
  const std::size_t per_epoch = (n + config.batch_size - 1) / config.batch_size;
  const nn::LrSchedule schedule{config.base_lr, config.epochs * per_epoch};
  const std::size_t n_blocks = mc.n_blocks;
  nn::AdamState<float> adam(model.params().size());
  std::vector<float> grads(model.params().size());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(config.seed);
  ForwardTrace<float> trace;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const Checkpoint saved{{model.params().begin(), model.params().end()},
                           {model.stats().begin(), model.stats().end()},
                           adam,
                           model.batchnorm_calibrated()};
    std::shuffle(order.begin(), order.end(), rng);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.block_ce.assign(n_blocks, 0.0);
    rec.block_fkd.assign(n_blocks, 0.0);
    rec.block_total.assign(n_blocks, 0.0);
    rec.head_accuracy.assign(n_blocks + 1, 0.0);
    try {
      for (std::size_t b = 0; b < per_epoch; ++b) {
        const std::size_t lo = b * config.batch_size;
        const std::size_t hi = std::min(n, lo + config.batch_size);
        const std::span<const std::size_t> rows(order.data() + lo, hi - lo);
        std::vector<std::size_t> labels;
        for (std::size_t r : rows) labels.push_back(fs.labels[r]);

        const auto out = model.forward_train(fs.gather(rows), &trace);
        if (!all_finite(out)) {
          throw DivergenceError("non-finite logits at step " + std::to_string(history.steps));
        }
        const auto loss = compute_losses(out, labels, mc.distill_temperature);
        if (!std::isfinite(loss.breakdown.total)) {
          throw DivergenceError("non-finite loss at step " + std::to_string(history.steps));
        }
        model.backward(trace, loss.grads, grads);
        rec.lr = nn::cosine_lr(history.steps, schedule);
        nn::adam_step<float>(model.params(), grads, adam, rec.lr);
        ++history.steps;

        const double w = static_cast<double>(rows.size());
        const auto& lb = loss.breakdown;
        for (std::size_t m = 0; m < n_blocks; ++m) {
          rec.block_ce[m] += w * lb.block_ce[m];
          rec.block_fkd[m] += w * lb.block_fkd[m];
          rec.block_total[m] += w * lb.block_total[m];
        }
        rec.fusion += w * lb.fusion;
        rec.total += w * lb.total;
        for (std::size_t i = 0; i < rows.size(); ++i) {
          for (std::size_t m = 0; m <= n_blocks; ++m) {
            const auto& logits = m < n_blocks ? out.block_logits[m] : out.fusion_logits;
            if (argmax(logit_row(logits, i)) == labels[i]) rec.head_accuracy[m] += 1.0;
          }
        }
      }
    } catch (const DivergenceError& e) {
      std::copy(saved.params.begin(), saved.params.end(), model.params().begin());
      std::copy(saved.stats.begin(), saved.stats.end(), model.stats().begin());
      model.set_batchnorm_calibrated(saved.calibrated);
      history.diverged = true;
      history.divergence_message = "epoch " + std::to_string(epoch) + ": " + e.what();
      return history;
    }

    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t m = 0; m < n_blocks; ++m) {
      rec.block_ce[m] *= inv;
      rec.block_fkd[m] *= inv;
      rec.block_total[m] *= inv;
    }
    rec.fusion *= inv;
    rec.total *= inv;
    for (double& a : rec.head_accuracy) a *= inv;
    history.epochs.push_back(rec);
    if (on_epoch) on_epoch(history.epochs.back());
  }
  return history;
}

template <typename T>
std::vector<Prediction> predict_batch(const ResTcn<T>& model, const nn::Tensor<T>& batch) {
  const auto out = model.forward_infer(batch);
  const std::size_t b = batch.dim(0);
  std::vector<Prediction> preds(b);
  for (std::size_t i = 0; i < b; ++i) {
    Prediction& p = preds[i];
    for (const auto& logits : out.block_logits) {
      p.block_probs.push_back(nn::softmax(logit_row(logits, i)));
    }
    p.fusion_probs = nn::softmax(logit_row(out.fusion_logits, i));
    p.rank1 = argmax(p.fusion_probs);
    p.uncalibrated = !model.batchnorm_calibrated();
  }
  return preds;
}

template std::vector<Prediction> predict_batch(const ResTcn<float>&, const nn::Tensor<float>&);
template std::vector<Prediction> predict_batch(const ResTcn<double>&, const nn::Tensor<double>&);

Prediction predict(const ResTcn<float>& model, const data::SkeletonSequence& sequence) {
  const std::size_t t = model.config().time_steps;
  nn::Tensor<float> batch({1, t, data::kFeatureDim}, data::to_features(sequence, t));
  return predict_batch(model, batch).front();
}

std::vector<Prediction> predict_features(const ResTcn<float>& model, const FeatureSet& features,
                                         std::size_t batch_size) {
  if (batch_size == 0) throw DomainError("batch_size must be >= 1");
  check_compatible(model, features);
  std::vector<Prediction> preds;
  preds.reserve(features.size());
  std::vector<std::size_t> rows;
  for (std::size_t lo = 0; lo < features.size(); lo += batch_size) {
    rows.clear();
    for (std::size_t r = lo; r < std::min(features.size(), lo + batch_size); ++r) rows.push_back(r);
    for (auto& p : predict_batch(model, features.gather(rows))) preds.push_back(std::move(p));
  }
  return preds;
}

}  // namespace restcn::model
