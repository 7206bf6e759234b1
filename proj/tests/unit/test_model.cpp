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

#include <cmath>
#include <cstring>
#include <random>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "restcn/common/error.hpp"
#include "restcn/data/dataset.hpp"
#include "restcn/model/artifact.hpp"
#include "restcn/model/fkd_loss.hpp"
#include "restcn/model/res_tcn.hpp"
#include "restcn/model/trainer.hpp"
#include "restcn/nn/losses.hpp"
#include "restcn/nn/optim.hpp"
#include "test_util.hpp"

namespace restcn::model {
namespace {

using nn::Tensor;
using restcn::testing::numeric_gradient;
using restcn::testing::random_tensor;
using restcn::testing::random_vector;
using restcn::testing::relative_error;

ModelConfig tiny_config() {
  ModelConfig c;
  c.reduced = true;
  c.n_blocks = 2;
  c.subblocks_per_block = 2;
  c.block_widths = {4, 6};
  c.block_strides = {1, 2};
  c.kernel = 3;
  c.n_classes = 2;
  c.input_dim = 3;
  c.time_steps = 12;
  return c;
}

template <typename T>
void zero(ResTcn<T>& m, Slot s) {
  for (T& v : m.param(s)) v = T(0);
}

// ---------------------------------------------------------------------------
// Straight-line reference for a single-block network, written directly from
// the architecture description with explicit loops.

using Seq = std::vector<std::vector<double>>;  // [time][channel]

struct RefUnit {
  std::size_t cin, cout, stride, kernel;
  std::vector<double> gamma, beta, w, b, proj, mean, var;
  bool has_proj;
};

Seq ref_conv(const Seq& x, const RefUnit& u) {
  const std::size_t t = x.size();
  const std::size_t out_t = (t + u.stride - 1) / u.stride;
  const long pad = static_cast<long>((u.kernel - 1) / 2);
  Seq y(out_t, std::vector<double>(u.cout, 0.0));
  for (std::size_t o = 0; o < out_t; ++o) {
    for (std::size_t f = 0; f < u.cout; ++f) {
      double acc = u.b[f];
      for (std::size_t k = 0; k < u.kernel; ++k) {
        const long src = static_cast<long>(o * u.stride + k) - pad;
        if (src < 0 || src >= static_cast<long>(t)) continue;
        for (std::size_t c = 0; c < u.cin; ++c) {
          acc += x[static_cast<std::size_t>(src)][c] * u.w[(k * u.cin + c) * u.cout + f];
        }
      }
      y[o][f] = acc;
    }
  }
  return y;
}

std::vector<std::vector<double>> reference_forward(const std::vector<Seq>& batch,
                                                   std::vector<RefUnit> units,
                                                   const std::vector<double>& hw,
                                                   const std::vector<double>& hb,
                                                   const std::vector<double>& fw,
                                                   const std::vector<double>& fb,
                                                   std::size_t n_classes, bool train) {
  std::vector<Seq> xs = batch;
  for (auto& u : units) {
    // Normalization statistics per channel.
    std::vector<double> mean(u.cin, 0.0), var(u.cin, 0.0);
    if (train) {
      double count = 0.0;
      for (const auto& x : xs) {
        for (const auto& row : x) {
          for (std::size_t c = 0; c < u.cin; ++c) mean[c] += row[c];
        }
        count += static_cast<double>(x.size());
      }
      for (double& m : mean) m /= count;
      for (const auto& x : xs) {
        for (const auto& row : x) {
          for (std::size_t c = 0; c < u.cin; ++c) var[c] += (row[c] - mean[c]) * (row[c] - mean[c]);
        }
      }
      for (double& v : var) v /= count;
    } else {
      mean = u.mean;
      var = u.var;
    }
    std::vector<Seq> next;
    for (const auto& x : xs) {
      Seq a = x;
      for (auto& row : a) {
        for (std::size_t c = 0; c < u.cin; ++c) {
          const double n = (row[c] - mean[c]) / std::sqrt(var[c] + 1e-5);
          row[c] = std::max(0.0, u.gamma[c] * n + u.beta[c]);
        }
      }
      Seq y = ref_conv(a, u);
      for (std::size_t o = 0; o < y.size(); ++o) {
        for (std::size_t f = 0; f < u.cout; ++f) {
          double skip = 0.0;
          if (u.has_proj) {
            for (std::size_t c = 0; c < u.cin; ++c) skip += x[o * u.stride][c] * u.proj[c * u.cout + f];
          } else {
            skip = x[o][f];
          }
          y[o][f] += skip;
        }
      }
      next.push_back(std::move(y));
    }
    xs = std::move(next);
  }
  // Heads: one block head plus the fusion head over the same pooled vector.
  std::vector<std::vector<double>> out;
  for (const auto& x : xs) {
    const std::size_t w = x[0].size();
    std::vector<double> pooled(w, 0.0);
    for (const auto& row : x)
      for (std::size_t c = 0; c < w; ++c) pooled[c] += row[c] / static_cast<double>(x.size());
    std::vector<double> block(n_classes), fusion(n_classes);
    for (std::size_t j = 0; j < n_classes; ++j) {
      block[j] = hb[j];
      fusion[j] = fb[j];
      for (std::size_t c = 0; c < w; ++c) {
        block[j] += pooled[c] * hw[c * n_classes + j];
        fusion[j] += pooled[c] * fw[c * n_classes + j];
      }
    }
    block.insert(block.end(), fusion.begin(), fusion.end());
    out.push_back(block);
  }
  return out;
}

TEST(ResTcn, SingleBlockMatchesStraightLineReference) {
  ModelConfig c;
  c.reduced = true;
  c.n_blocks = 1;
  c.subblocks_per_block = 3;
  c.block_widths = {5};
  c.block_strides = {2};
  c.kernel = 4;
  c.n_classes = 3;
  c.input_dim = 6;
  c.time_steps = 11;
  auto model = ResTcn<double>::init(c, 3);
  std::mt19937_64 rng(4);
  for (double& p : model.params()) p += 0.1 * random_vector(1, rng)[0];  // nonzero biases too
  for (double& s : model.stats()) s = 0.5 + std::abs(random_vector(1, rng)[0]);

  std::vector<RefUnit> units;
  auto get = [&](Slot s) {
    auto v = model.param(s);
    return std::vector<double>(v.begin(), v.end());
  };
  for (const auto& u : model.layout().blocks[0]) {
    RefUnit r;
    r.cin = u.in_channels;
    r.cout = u.out_channels;
    r.stride = u.conv.stride;
    r.kernel = c.kernel;
    r.gamma = get(u.bn_gamma);
    r.beta = get(u.bn_beta);
    r.w = get(u.conv_weights);
    r.b = get(u.conv_bias);
    r.has_proj = u.projection.has_value();
    if (r.has_proj) r.proj = get(*u.projection);
    r.mean.assign(model.stats().begin() + static_cast<long>(u.running_mean.offset),
                  model.stats().begin() + static_cast<long>(u.running_mean.offset + r.cin));
    r.var.assign(model.stats().begin() + static_cast<long>(u.running_var.offset),
                 model.stats().begin() + static_cast<long>(u.running_var.offset + r.cin));
    units.push_back(r);
  }
  ASSERT_TRUE(units[0].has_proj);
  ASSERT_FALSE(units[1].has_proj);

  const std::size_t b = 3;
  const auto x = random_tensor({b, c.time_steps, c.input_dim}, rng, -2.0, 2.0);
  std::vector<Seq> batch(b, Seq(c.time_steps, std::vector<double>(c.input_dim)));
  for (std::size_t n = 0; n < b; ++n)
    for (std::size_t t = 0; t < c.time_steps; ++t)
      for (std::size_t ch = 0; ch < c.input_dim; ++ch) batch[n][t][ch] = x.at(n, t, ch);

  const auto& lay = model.layout();
  for (bool train : {false, true}) {
    const auto want = reference_forward(batch, units, get(lay.block_heads[0].weights),
                                        get(lay.block_heads[0].bias), get(lay.fusion_head.weights),
                                        get(lay.fusion_head.bias), c.n_classes, train);
    ResTcn<double> copy = model;
    const auto got = train ? copy.forward_train(x, nullptr) : model.forward_infer(x);
    for (std::size_t n = 0; n < b; ++n) {
      for (std::size_t j = 0; j < c.n_classes; ++j) {
        EXPECT_NEAR(got.block_logits[0].data()[n * c.n_classes + j], want[n][j], 1e-6);
        EXPECT_NEAR(got.fusion_logits.data()[n * c.n_classes + j], want[n][c.n_classes + j], 1e-6);
      }
    }
  }
}

TEST(ResTcn, InitIsDeterministicPerSeed) {
  ModelConfig c;
  c.n_classes = 3;
  const auto a = ResTcn<float>::init(c, 7);
  const auto b = ResTcn<float>::init(c, 7);
  const auto d = ResTcn<float>::init(c, 8);
  ASSERT_EQ(a.params().size(), b.params().size());
  EXPECT_EQ(std::memcmp(a.params().data(), b.params().data(), a.params().size() * sizeof(float)), 0);
  EXPECT_NE(std::memcmp(a.params().data(), d.params().data(), a.params().size() * sizeof(float)), 0);
}

TEST(ResTcn, InitFollowsKaimingUniformAndUnitScale) {
  ModelConfig c;
  const auto m = ResTcn<double>::init(c, 1);
  for (const auto& block : m.layout().blocks) {
    for (const auto& u : block) {
      const double bound = std::sqrt(6.0 / static_cast<double>(c.kernel * u.in_channels));
      double max_abs = 0.0;
      for (double w : m.param(u.conv_weights)) max_abs = std::max(max_abs, std::abs(w));
      EXPECT_LE(max_abs, bound);
      EXPECT_GT(max_abs, 0.9 * bound);
      for (double g : m.param(u.bn_gamma)) EXPECT_EQ(g, 1.0);
      for (double v : m.param(u.bn_beta)) EXPECT_EQ(v, 0.0);
      for (double v : m.param(u.conv_bias)) EXPECT_EQ(v, 0.0);
    }
  }
  EXPECT_FALSE(m.batchnorm_calibrated());
}

TEST(ResTcn, DefaultArchitecture) {
  ModelConfig c;
  c.n_classes = 8;
  const Layout lay = make_layout(c);
  ASSERT_EQ(lay.blocks.size(), 4u);
  const auto& first = lay.blocks[0][0];
  EXPECT_EQ(first.conv.filters, 32u);
  EXPECT_EQ(first.conv.kernel, 8u);
  EXPECT_EQ(first.conv.stride, 1u);
  EXPECT_EQ(first.in_channels, 34u);
  const std::size_t widths[] = {32, 64, 128, 256};
  const std::size_t strides[] = {1, 2, 2, 2};
  std::size_t expected_params = 0, cin = 34;
  for (std::size_t b = 0; b < 4; ++b) {
    ASSERT_EQ(lay.blocks[b].size(), 3u);
    for (std::size_t u = 0; u < 3; ++u) {
      const auto& unit = lay.blocks[b][u];
      EXPECT_EQ(unit.out_channels, widths[b]);
      EXPECT_EQ(unit.conv.stride, u == 0 ? strides[b] : 1u);
      EXPECT_EQ(unit.projection.has_value(), u == 0);
      expected_params += 2 * cin + 8 * cin * widths[b] + widths[b];
      if (u == 0) expected_params += cin * widths[b];
      cin = widths[b];
    }
    EXPECT_EQ(lay.block_heads[b].in_features, widths[b]);
    expected_params += widths[b] * 8 + 8;
  }
  EXPECT_EQ(lay.fusion_head.in_features, 480u);
  expected_params += 480 * 8 + 8;
  EXPECT_EQ(lay.num_params, expected_params);
}

TEST(ResTcn, FiveHeadsOfWidthN) {
  ModelConfig c;
  c.n_classes = 8;
  const auto m = ResTcn<float>::init(c, 2);
  std::mt19937_64 rng(1);
  const Tensor<float> x = random_tensor({2, 64, 34}, rng).cast<float>();
  const auto out = m.forward_infer(x);
  ASSERT_EQ(out.block_logits.size(), 4u);
  for (const auto& b : out.block_logits) EXPECT_EQ(b.shape(), (nn::Shape{2, 8}));
  EXPECT_EQ(out.fusion_logits.shape(), (nn::Shape{2, 8}));
}

TEST(ResTcn, ZeroHeadsGiveUniformDistributions) {
  ModelConfig c;
  c.n_classes = 5;
  auto m = ResTcn<float>::init(c, 2);
  for (const auto& h : m.layout().block_heads) zero(m, h.weights);
  zero(m, m.layout().fusion_head.weights);
  std::mt19937_64 rng(1);
  const auto preds = predict_batch(m, random_tensor({3, 64, 34}, rng).cast<float>());
  for (const auto& p : preds) {
    for (const auto& probs : p.block_probs)
      for (double v : probs) EXPECT_NEAR(v, 0.2, 1e-12);
    for (double v : p.fusion_probs) EXPECT_NEAR(v, 0.2, 1e-12);
    EXPECT_EQ(p.rank1, 0u);
    EXPECT_TRUE(p.uncalibrated);
  }
}

TEST(ResTcn, WrongInputShapeThrows) {
  const auto m = ResTcn<float>::init(tiny_config(), 1);
  EXPECT_THROW(m.forward_infer(Tensor<float>({2, 11, 3})), DimensionError);
  EXPECT_THROW(m.forward_infer(Tensor<float>({2, 12, 4})), DimensionError);
  EXPECT_THROW(m.forward_infer(Tensor<float>({12, 3})), DimensionError);
}

TEST(ResTcn, ConfigValidation) {
  ModelConfig c;
  c.n_blocks = 3;
  c.block_widths = {32, 64, 128};
  c.block_strides = {1, 2, 2};
  EXPECT_THROW(c.validate(), DomainError);
  c.reduced = true;
  EXPECT_NO_THROW(c.validate());
  c.distill_temperature = 0.0;
  EXPECT_THROW(c.validate(), DomainError);
  c = {};
  c.block_widths = {32, 64};
  EXPECT_THROW(c.validate(), DomainError);
  c = {};
  c.n_classes = 1;
  EXPECT_THROW(c.validate(), DomainError);
}

TEST(ResTcn, FloatTracksDouble) {
  ModelConfig c;
  c.n_classes = 4;
  const auto md = ResTcn<double>::init(c, 5);
  const auto mf = md.cast<float>();
  std::mt19937_64 rng(6);
  const auto x = random_tensor({2, 64, 34}, rng);
  const auto a = md.forward_infer(x);
  const auto b = mf.forward_infer(x.cast<float>());
  for (std::size_t i = 0; i < a.fusion_logits.size(); ++i) {
    EXPECT_NEAR(b.fusion_logits[i], a.fusion_logits[i], 1e-3 * (1 + std::abs(a.fusion_logits[i])));
  }
}

// ---------------------------------------------------------------------------
// Losses.

// The objective evaluated independently, with the fusion teacher frozen at
// `teacher`.
double objective(const HeadOutputs<double>& out, const std::vector<std::size_t>& y,
                 const std::vector<std::vector<double>>& teacher, double td) {
  const std::size_t b = y.size(), n = out.fusion_logits.dim(1);
  double total = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    auto row = [&](const Tensor<double>& t) {
      return std::vector<double>(t.data() + i * n, t.data() + (i + 1) * n);
    };
    for (const auto& bl : out.block_logits) {
      const auto z = row(bl);
      double kl = 0.0;
      const auto q = nn::tempered_softmax(z, td).probs;
      for (std::size_t j = 0; j < n; ++j) kl += teacher[i][j] * std::log(teacher[i][j] / q[j]);
      total += kl - std::log(nn::softmax(z)[y[i]]);
    }
    total -= std::log(nn::softmax(row(out.fusion_logits))[y[i]]);
  }
  return total / static_cast<double>(b);
}

std::vector<std::vector<double>> teacher_of(const HeadOutputs<double>& out, double td) {
  std::vector<std::vector<double>> t;
  const std::size_t n = out.fusion_logits.dim(1);
  for (std::size_t i = 0; i < out.fusion_logits.dim(0); ++i) {
    const double* z = out.fusion_logits.data() + i * n;
    t.push_back(nn::tempered_softmax(std::vector<double>(z, z + n), td).probs);
  }
  return t;
}

TEST(FkdLoss, IdenticalLogitsHaveZeroDistillation) {
  std::mt19937_64 rng(1);
  HeadOutputs<double> out;
  out.fusion_logits = random_tensor({4, 5}, rng, -3, 3);
  out.block_logits.assign(4, out.fusion_logits);
  const std::vector<std::size_t> y = {0, 1, 4, 2};
  const auto r = compute_losses(out, y, 3.0);
  for (double f : r.breakdown.block_fkd) EXPECT_NEAR(f, 0.0, 1e-15);
  for (std::size_t m = 0; m < 4; ++m) EXPECT_EQ(r.breakdown.block_total[m], r.breakdown.block_ce[m]);
}

TEST(FkdLoss, CertainFusionHasZeroLoss) {
  HeadOutputs<double> out;
  out.fusion_logits = Tensor<double>({1, 2}, std::vector<double>{-400.0, 400.0});
  out.block_logits.assign(4, Tensor<double>({1, 2}));
  const auto r = compute_losses(out, std::vector<std::size_t>{1}, 3.0);
  EXPECT_EQ(r.breakdown.fusion, 0.0);
}

TEST(FkdLoss, TotalIsSumOfTermsAndFkdNonNegative) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    HeadOutputs<double> out;
    out.fusion_logits = random_tensor({3, 4}, rng, -5, 5);
    for (int m = 0; m < 4; ++m) out.block_logits.push_back(random_tensor({3, 4}, rng, -5, 5));
    const std::vector<std::size_t> y = {static_cast<std::size_t>(trial % 4), 0, 3};
    const auto lb = compute_losses(out, y, 3.0).breakdown;
    double sum = 0.0;
    for (double l : lb.block_total) sum += l;
    sum += lb.fusion;
    EXPECT_EQ(lb.total, sum);
    for (double f : lb.block_fkd) EXPECT_GE(f, 0.0);
    EXPECT_NEAR(lb.total, objective(out, y, teacher_of(out, 3.0), 3.0), 1e-12);
  }
}

TEST(FkdLoss, LogitGradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    HeadOutputs<double> out;
    out.fusion_logits = random_tensor({2, 2}, rng, -2, 2);
    for (int m = 0; m < 4; ++m) out.block_logits.push_back(random_tensor({2, 2}, rng, -2, 2));
    const std::vector<std::size_t> y = {1, 0};
    const auto r = compute_losses(out, y, 3.0);
    const auto teacher = teacher_of(out, 3.0);
    auto f = [&] { return objective(out, y, teacher, 3.0); };
    for (std::size_t m = 0; m < 4; ++m) {
      EXPECT_LT(relative_error(r.grads.block_logits[m].vec(),
                               numeric_gradient(out.block_logits[m].span(), f)),
                1e-4);
    }
    EXPECT_LT(relative_error(r.grads.fusion_logits.vec(),
                             numeric_gradient(out.fusion_logits.span(), f)),
              1e-4);
  }
}

TEST(FkdLoss, RejectsBadLabels) {
  HeadOutputs<double> out;
  out.fusion_logits = Tensor<double>({2, 3});
  out.block_logits.assign(4, Tensor<double>({2, 3}));
  EXPECT_THROW(compute_losses(out, std::vector<std::size_t>{0}, 3.0), DimensionError);
  EXPECT_THROW(compute_losses(out, std::vector<std::size_t>{0, 3}, 3.0), DomainError);
}

// ---------------------------------------------------------------------------
// Whole-model gradient.

TEST(ResTcn, FullModelGradientMatchesFiniteDifferences) {
  const ModelConfig c = tiny_config();
  auto model = ResTcn<double>::init(c, 11);
  std::mt19937_64 rng(12);
  for (double& p : model.params()) p += 0.05 * random_vector(1, rng)[0];
  const auto x = random_tensor({2, c.time_steps, c.input_dim}, rng, -1.5, 1.5);
  const std::vector<std::size_t> y = {1, 0};

  ForwardTrace<double> trace;
  const auto out = model.forward_train(x, &trace);
  const auto loss = compute_losses(out, y, c.distill_temperature);
  std::vector<double> grads(model.params().size());
  model.backward(trace, loss.grads, grads);

  const auto teacher = teacher_of(out, c.distill_temperature);
  auto f = [&] {
    return objective(model.forward_train(x, nullptr), y, teacher, c.distill_temperature);
  };
  const auto numeric = numeric_gradient(model.params(), f);
  EXPECT_LT(relative_error(grads, numeric), 1e-4);

  // Per-slot view, so a failure points at the offending layer.
  auto slot_error = [&](Slot s) {
    return relative_error(std::span<const double>(grads).subspan(s.offset, s.size),
                          std::span<const double>(numeric).subspan(s.offset, s.size));
  };
  for (const auto& block : model.layout().blocks) {
    for (const auto& u : block) {
      EXPECT_LT(slot_error(u.conv_weights), 1e-4);
      EXPECT_LT(slot_error(u.bn_gamma), 1e-4);
      EXPECT_LT(slot_error(u.bn_beta), 1e-4);
      if (u.projection) {
        EXPECT_LT(slot_error(*u.projection), 1e-4);
      }
    }
  }
  for (const auto& h : model.layout().block_heads) EXPECT_LT(slot_error(h.weights), 1e-4);
  EXPECT_LT(slot_error(model.layout().fusion_head.weights), 1e-4);
}

// ---------------------------------------------------------------------------
// Training, prediction, artifacts.

data::Dataset small_dataset(std::uint64_t seed, std::size_t per_class = 8) {
  data::SynthConfig s;
  s.n_classes = 2;
  s.samples_per_class = per_class;
  s.frames = 12;
  s.seed = seed;
  return data::generate_synthetic(s);
}

ModelConfig small_model() {
  ModelConfig c = tiny_config();
  c.input_dim = data::kFeatureDim;
  return c;
}

TEST(Train, ZeroEpochsLeaveModelUnchanged) {
  auto m = ResTcn<float>::init(small_model(), 1);
  const auto before = std::vector<float>(m.params().begin(), m.params().end());
  TrainConfig tc;
  tc.epochs = 0;
  const auto h = train(m, small_dataset(1), tc);
  EXPECT_TRUE(h.epochs.empty());
  EXPECT_EQ(std::vector<float>(m.params().begin(), m.params().end()), before);
  EXPECT_FALSE(m.batchnorm_calibrated());
}

TEST(Train, DeterministicForFixedSeed) {
  TrainConfig tc;
  tc.epochs = 4;
  tc.batch_size = 5;
  tc.seed = 3;
  auto run = [&] {
    auto m = ResTcn<float>::init(small_model(), 1);
    auto h = train(m, small_dataset(2), tc);
    return std::make_pair(std::vector<float>(m.params().begin(), m.params().end()), h);
  };
  const auto a = run();
  const auto b = run();
  EXPECT_EQ(a.first, b.first);
  ASSERT_EQ(a.second.epochs.size(), 4u);
  for (std::size_t e = 0; e < 4; ++e) {
    EXPECT_EQ(a.second.epochs[e].total, b.second.epochs[e].total);
    EXPECT_EQ(a.second.epochs[e].block_fkd, b.second.epochs[e].block_fkd);
  }
  EXPECT_EQ(a.second.steps, 4u * 4u);  // 16 samples in batches of 5
}

TEST(Train, HistoryRecordsEveryTermAndLossFalls) {
  TrainConfig tc;
  tc.epochs = 30;
  tc.batch_size = 8;
  tc.base_lr = 0.01;
  auto m = ResTcn<float>::init(small_model(), 4);
  const auto h = train(m, small_dataset(5, 12), tc);
  ASSERT_EQ(h.epochs.size(), 30u);
  for (const auto& e : h.epochs) {
    ASSERT_EQ(e.block_ce.size(), 2u);
    ASSERT_EQ(e.block_fkd.size(), 2u);
    ASSERT_EQ(e.head_accuracy.size(), 3u);
    for (std::size_t i = 0; i < 2; ++i) EXPECT_NEAR(e.block_total[i], e.block_ce[i] + e.block_fkd[i], 1e-9);
  }
  EXPECT_LT(h.epochs.back().total, h.epochs.front().total);
  EXPECT_NEAR(h.epochs.front().lr, nn::cosine_lr(2, {0.01, 90}), 1e-15);
  EXPECT_TRUE(m.batchnorm_calibrated());
}

TEST(Train, DivergenceRestoresLastGoodCheckpoint) {
  TrainConfig tc;
  tc.epochs = 3;
  tc.base_lr = 1e30;
  auto m = ResTcn<float>::init(small_model(), 1);
  const auto before = std::vector<float>(m.params().begin(), m.params().end());
  const auto h = train(m, small_dataset(1), tc);
  EXPECT_TRUE(h.diverged);
  EXPECT_FALSE(h.divergence_message.empty());
  const auto after = std::vector<float>(m.params().begin(), m.params().end());
  if (h.epochs.empty()) {
    EXPECT_EQ(after, before);
  }
  for (float p : after) ASSERT_TRUE(std::isfinite(p));
}

TEST(Train, RejectsBadConfig) {
  auto m = ResTcn<float>::init(small_model(), 1);
  TrainConfig tc;
  tc.base_lr = 0.0;
  EXPECT_THROW(train(m, small_dataset(1), tc), DomainError);
  tc = {};
  tc.batch_size = 0;
  EXPECT_THROW(train(m, small_dataset(1), tc), DomainError);
  tc = {};
  EXPECT_THROW(train(m, data::Dataset{}, tc), DomainError);
}

TEST(Predict, ArgmaxTiesGoToLowestIndex) {
  EXPECT_EQ(argmax(std::vector<double>{0.2, 0.4, 0.4}), 1u);
  EXPECT_EQ(argmax(std::vector<double>{0.5, 0.5}), 0u);
  EXPECT_EQ(argmax(std::vector<double>{0.1, 0.2, 0.7}), 2u);
}

TEST(Predict, DistributionsSumToOne) {
  auto m = ResTcn<float>::init(small_model(), 2);
  TrainConfig tc;
  tc.epochs = 2;
  train(m, small_dataset(3), tc);
  const auto ds = small_dataset(4);
  for (const auto& s : ds.samples) {
    const auto p = predict(m, s.sequence);
    EXPECT_FALSE(p.uncalibrated);
    ASSERT_EQ(p.block_probs.size(), 2u);
    for (const auto& probs : p.block_probs) {
      double sum = 0.0;
      for (double v : probs) sum += v;
      EXPECT_NEAR(sum, 1.0, 1e-9);
    }
    double sum = 0.0;
    for (double v : p.fusion_probs) sum += v;
    EXPECT_NEAR(sum, 1.0, 1e-9);
    EXPECT_EQ(p.rank1, argmax(p.fusion_probs));
  }
}

TEST(Artifact, RoundTripIsBitIdentical) {
  auto m = ResTcn<float>::init(small_model(), 5);
  TrainConfig tc;
  tc.epochs = 2;
  train(m, small_dataset(6), tc);
  const Artifact a{m, {"cough", "sneeze"}};
  std::stringstream buf;
  write_artifact(a, buf);
  const Artifact b = read_artifact(buf);
  EXPECT_EQ(b.model.config(), a.model.config());
  EXPECT_EQ(b.class_names, a.class_names);
  EXPECT_TRUE(b.model.batchnorm_calibrated());
  ASSERT_EQ(b.model.params().size(), a.model.params().size());
  EXPECT_EQ(std::memcmp(b.model.params().data(), a.model.params().data(),
                        a.model.params().size() * sizeof(float)),
            0);

  std::mt19937_64 rng(1);
  const auto x = random_tensor({3, 12, 34}, rng).cast<float>();
  const auto ya = a.model.forward_infer(x);
  const auto yb = b.model.forward_infer(x);
  EXPECT_EQ(std::memcmp(ya.fusion_logits.data(), yb.fusion_logits.data(),
                        ya.fusion_logits.size() * sizeof(float)),
            0);
  for (std::size_t i = 0; i < ya.block_logits.size(); ++i) {
    EXPECT_EQ(ya.block_logits[i].vec(), yb.block_logits[i].vec());
  }
}

TEST(Artifact, HeaderIsTextAndPayloadLittleEndian) {
  ModelConfig c = tiny_config();
  ResTcn<float> m(c);
  m.params()[0] = 1.0f;  // 0x3f800000
  std::stringstream buf;
  write_artifact({m, {}}, buf);
  const std::string s = buf.str();
  EXPECT_EQ(s.rfind("RESTCN-MODEL 1\n", 0), 0u);
  const std::size_t payload = s.find('\n', s.find('\n') + 1) + 1;
  const unsigned char* p = reinterpret_cast<const unsigned char*>(s.data() + payload);
  EXPECT_EQ(p[0], 0x00);
  EXPECT_EQ(p[2], 0x80);
  EXPECT_EQ(p[3], 0x3f);
  EXPECT_EQ(s.size() - payload, 4 * (m.params().size() + m.stats().size()));
}

TEST(Artifact, CorruptInputIsRejected) {
  const ResTcn<float> m(tiny_config());
  std::stringstream buf;
  write_artifact({m, {}}, buf);
  const std::string good = buf.str();

  std::stringstream truncated(good.substr(0, good.size() - 3));
  EXPECT_THROW(read_artifact(truncated), SchemaError);
  std::stringstream magic("NOT-A-MODEL 1\n{}\n");
  EXPECT_THROW(read_artifact(magic), SchemaError);
  std::string bad_header = good;
  bad_header.replace(bad_header.find("\"kernel\":3"), 10, "\"kernel\":4");
  std::stringstream mismatched(bad_header);
  EXPECT_THROW(read_artifact(mismatched), SchemaError);
}

TEST(Artifact, ConfigJsonRoundTripAndUnknownKeys) {
  ModelConfig c = tiny_config();
  c.distill_temperature = 2.5;
  const auto j = config_to_json(c);
  EXPECT_EQ(config_from_json(nlohmann::json::parse(j.dump())), c);
  EXPECT_THROW(config_from_json(nlohmann::json{{"widths", 3}}), SchemaError);
  EXPECT_THROW(config_from_json(nlohmann::json{{"kernel", "eight"}}), SchemaError);
  EXPECT_EQ(config_from_json(nlohmann::json::object()), ModelConfig{});
}

}  // namespace
}  // namespace restcn::model
