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

// Feature preparation, the training loop and rank-1 prediction.

#ifndef RESTCN_MODEL_TRAINER_HPP_
#define RESTCN_MODEL_TRAINER_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "restcn/data/dataset.hpp"
#include "restcn/model/fkd_loss.hpp"
#include "restcn/model/res_tcn.hpp"
#include "restcn/nn/tensor.hpp"

namespace restcn::model {

// Normalized, resampled inputs of a whole dataset: [n, time_steps, 34].
struct FeatureSet {
  nn::Tensor<float> inputs;
  std::vector<std::size_t> labels;

  std::size_t size() const { return labels.size(); }
  nn::Tensor<float> gather(std::span<const std::size_t> rows) const;
};

FeatureSet make_features(const data::Dataset& dataset, std::size_t time_steps);

struct TrainConfig {
  std::size_t epochs = 200;
  double base_lr = 0.001;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double lr = 0.0;        // at the last step of the epoch
  // Sample-weighted means over the epoch's batches.
  std::vector<double> block_ce, block_fkd, block_total;
  double fusion = 0.0;
  double total = 0.0;
  // Train-mode accuracy per head; blocks first, fusion last.
  std::vector<double> head_accuracy;

  double mean_fkd() const;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t steps = 0;
  bool diverged = false;
  std::string divergence_message;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Adam with one cosine cycle over epochs x batches steps. Shuffling draws
// from a generator seeded with config.seed, so runs are reproducible. On a
// non-finite loss or gradient the model is restored to its state at the
// start of the failing epoch and the history is marked diverged. Zero
// epochs leave the model untouched.
TrainHistory train(ResTcn<float>& model, const data::Dataset& train_set,
                   const TrainConfig& config, const EpochCallback& on_epoch = {});

struct Prediction {
  std::vector<std::vector<double>> block_probs;
  std::vector<double> fusion_probs;
  std::size_t rank1 = 0;
  // Batch norm had no running statistics yet.
  bool uncalibrated = false;
};

// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> values);

template <typename T>
std::vector<Prediction> predict_batch(const ResTcn<T>& model, const nn::Tensor<T>& batch);

Prediction predict(const ResTcn<float>& model, const data::SkeletonSequence& sequence);

std::vector<Prediction> predict_features(const ResTcn<float>& model, const FeatureSet& features,
                                         std::size_t batch_size = 64);

}  // namespace restcn::model

#endif  // RESTCN_MODEL_TRAINER_HPP_
