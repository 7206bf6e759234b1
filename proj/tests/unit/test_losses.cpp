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
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "restcn/common/error.hpp"
#include "restcn/nn/losses.hpp"
#include "restcn/nn/optim.hpp"
#include "test_util.hpp"

namespace restcn::nn {
namespace {

using restcn::testing::numeric_gradient;
using restcn::testing::random_vector;
using restcn::testing::relative_error;

std::vector<double> random_distribution(std::size_t n, std::mt19937_64& rng) {
  auto v = random_vector(n, rng, 1e-3, 1.0);
  double s = 0.0;
  for (double x : v) s += x;
  for (double& x : v) x /= s;
  return v;
}

// exp(z/T) / sum exp(z/T) with no shift; fine for the small logits used here.
std::vector<double> naive_softmax(const std::vector<double>& z, double t) {
  std::vector<double> p(z.size());
  double s = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) s += p[i] = std::exp(z[i] / t);
  for (double& x : p) x /= s;
  return p;
}

TEST(TemperedSoftmax, TemperatureOneIsPlainSoftmax) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const auto z = random_vector(8, rng, -5.0, 5.0);
    const auto a = tempered_softmax(z, 1.0).probs;
    const auto b = softmax(z);
    const auto c = naive_softmax(z, 1.0);
    for (std::size_t i = 0; i < z.size(); ++i) {
      EXPECT_NEAR(a[i], b[i], 1e-12);
      EXPECT_NEAR(a[i], c[i], 1e-12);
    }
  }
}

TEST(TemperedSoftmax, SymmetricLogitsGiveUniform) {
  for (double t : {0.1, 1.0, 3.0, 50.0}) {
    const auto p = tempered_softmax(std::vector<double>{0.0, 0.0}, t).probs;
    EXPECT_DOUBLE_EQ(p[0], 0.5);
    EXPECT_DOUBLE_EQ(p[1], 0.5);
  }
}

TEST(TemperedSoftmax, ScalingIdentity) {
  const auto a = tempered_softmax(std::vector<double>{2.0, 0.0}, 2.0).probs;
  const auto b = tempered_softmax(std::vector<double>{1.0, 0.0}, 1.0).probs;
  EXPECT_NEAR(a[0], b[0], 1e-15);
  EXPECT_NEAR(a[1], b[1], 1e-15);
}

TEST(TemperedSoftmax, ShiftInvariant) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    auto z = random_vector(6, rng, -10.0, 10.0);
    const double t = std::uniform_real_distribution<double>(0.2, 5.0)(rng);
    const auto p = tempered_softmax(z, t).probs;
    const double shift = std::uniform_real_distribution<double>(-1000.0, 1000.0)(rng);
    for (double& x : z) x += shift;
    const auto q = tempered_softmax(z, t).probs;
    for (std::size_t i = 0; i < p.size(); ++i) EXPECT_NEAR(p[i], q[i], 1e-12);
  }
}

TEST(TemperedSoftmax, NormalizedEvenForHugeLogits) {
  const auto p = tempered_softmax(std::vector<double>{1e300, -1e300, 0.0}, 3.0).probs;
  double s = 0.0;
  for (double x : p) {
    EXPECT_GE(x, 0.0);
    s += x;
  }
  EXPECT_NEAR(s, 1.0, 1e-9);
}

TEST(TemperedSoftmax, RejectsBadInput) {
  const std::vector<double> z = {1.0, 2.0};
  EXPECT_THROW(tempered_softmax(z, 0.0), DomainError);
  EXPECT_THROW(tempered_softmax(z, -1.0), DomainError);
  EXPECT_THROW(tempered_softmax(std::vector<double>{1.0, NAN}, 1.0), DomainError);
}

TEST(TemperedSoftmax, RandomOutputsSumToOne) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto z = random_vector(1 + trial % 9, rng, -30.0, 30.0);
    const double t = std::uniform_real_distribution<double>(0.05, 10.0)(rng);
    double s = 0.0;
    for (double x : tempered_softmax(z, t).probs) {
      ASSERT_GE(x, 0.0);
      s += x;
    }
    ASSERT_NEAR(s, 1.0, 1e-9);
  }
}

TEST(CrossEntropy, CertaintyAndUniform) {
  EXPECT_EQ(cross_entropy(std::vector<double>{0.0, 1.0, 0.0}, 1), 0.0);
  const std::vector<double> uniform(8, 1.0 / 8.0);
  EXPECT_NEAR(cross_entropy(uniform, 3), std::log(8.0), 1e-12);
  EXPECT_NEAR(cross_entropy(uniform, 3), 2.0794, 5e-5);
}

TEST(CrossEntropy, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    auto z = random_vector(5, rng, -3.0, 3.0);
    const std::size_t y = static_cast<std::size_t>(trial) % 5;
    const auto r = softmax_cross_entropy(z, y);
    EXPECT_NEAR(r.loss, cross_entropy(softmax(z), y), 1e-12);
    auto f = [&] { return softmax_cross_entropy(z, y).loss; };
    EXPECT_LT(relative_error(r.grad, numeric_gradient(z, f)), 1e-4);
  }
}

TEST(Kl, IdentityIsZero) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const auto p = random_distribution(7, rng);
    EXPECT_NEAR(kl_divergence(p, p).value, 0.0, 1e-12);
  }
}

TEST(Kl, HandComputedPair) {
  const std::vector<double> p = {0.5, 0.5}, q = {0.25, 0.75};
  const double want = 0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0);
  EXPECT_NEAR(kl_divergence(p, q).value, want, 1e-15);
  EXPECT_NEAR(kl_divergence(p, q).value, 0.14384, 5e-6);
  EXPECT_GT(std::abs(kl_divergence(p, q).value - kl_divergence(q, p).value), 1e-3);
}

TEST(Kl, NonNegativeOnRandomPairs) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial) % 8;
    const auto p = random_distribution(n, rng);
    const auto q = random_distribution(n, rng);
    ASSERT_GE(kl_divergence(p, q).value, 0.0);
  }
}

TEST(Kl, ZeroInQIsClampedAndFlagged) {
  const auto r = kl_divergence(std::vector<double>{0.5, 0.5}, std::vector<double>{1.0, 0.0});
  EXPECT_TRUE(r.clamped);
  EXPECT_TRUE(std::isfinite(r.value));
  EXPECT_NEAR(r.value, 0.5 * std::log(0.5) + 0.5 * std::log(0.5 / kProbabilityFloor), 1e-9);
}

TEST(Kl, GradientWrtStudentLogits) {
  std::mt19937_64 rng(7);
  for (double t : {1.0, 3.0}) {
    const auto target = random_distribution(4, rng);
    auto z = random_vector(4, rng, -2.0, 2.0);
    auto f = [&] { return kl_divergence(target, tempered_softmax(z, t).probs).value; };
    const auto g = kl_gradient_wrt_logits(target, tempered_softmax(z, t).probs, t);
    EXPECT_LT(relative_error(g, numeric_gradient(z, f)), 1e-4);
  }
}

TEST(Adam, FirstStepMovesByLearningRate) {
  std::vector<double> p = {1.0, 1.0, 1.0};
  const std::vector<double> g = {0.5, -2.0, 1e-9};
  AdamState<double> s(3);
  const double lr = 0.001;
  adam_step<double>(p, g, s, lr);
  // At t = 1 the corrected moments are g and g^2.
  for (std::size_t i = 0; i < 3; ++i) {
    const double want = 1.0 - lr * g[i] / (std::abs(g[i]) + 1e-8);
    EXPECT_NEAR(p[i], want, 1e-15);
  }
  EXPECT_NEAR(p[0], 1.0 - lr, 1e-10);
  EXPECT_NEAR(p[1], 1.0 + lr, 1e-10);
  EXPECT_EQ(s.step, 1u);
}

TEST(Adam, MatchesHandRolledUpdateOverSteps) {
  std::mt19937_64 rng(8);
  const std::size_t n = 9;
  auto p = random_vector(n, rng);
  auto ref = p;
  std::vector<double> m(n, 0.0), v(n, 0.0);
  AdamState<double> s(n);
  for (int t = 1; t <= 25; ++t) {
    const auto g = random_vector(n, rng);
    const double lr = 0.01 / t;
    adam_step<double>(p, g, s, lr);
    for (std::size_t i = 0; i < n; ++i) {
      m[i] = 0.9 * m[i] + 0.1 * g[i];
      v[i] = 0.999 * v[i] + 0.001 * g[i] * g[i];
      const double mh = m[i] / (1 - std::pow(0.9, t));
      const double vh = v[i] / (1 - std::pow(0.999, t));
      ref[i] -= lr * mh / (std::sqrt(vh) + 1e-8);
    }
  }
  for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(p[i], ref[i], 1e-12);
}

TEST(Adam, ZeroGradientIsAFixedPoint) {
  std::vector<double> p = {0.3, -0.7};
  const auto p0 = p;
  AdamState<double> s(2);
  for (int i = 0; i < 50; ++i) adam_step<double>(p, std::vector<double>{0.0, 0.0}, s, 0.001);
  EXPECT_EQ(p, p0);
}

TEST(Adam, DeterministicTrajectories) {
  auto run = [] {
    std::mt19937_64 rng(99);
    std::vector<float> p(100, 0.5f);
    AdamState<float> s(100);
    for (int t = 0; t < 10; ++t) {
      std::vector<float> g(100);
      for (float& x : g) x = static_cast<float>(std::normal_distribution<double>()(rng));
      adam_step<float>(p, g, s, 0.001);
    }
    return p;
  };
  EXPECT_EQ(run(), run());
}

TEST(Adam, NonFiniteGradientIsRejectedWithoutSideEffects) {
  std::vector<double> p = {1.0, 2.0};
  AdamState<double> s(2);
  adam_step<double>(p, std::vector<double>{0.1, 0.1}, s, 0.001);
  const auto p0 = p;
  const auto s0 = s;
  EXPECT_THROW(adam_step<double>(p, std::vector<double>{0.1, INFINITY}, s, 0.001), DivergenceError);
  EXPECT_EQ(p, p0);
  EXPECT_EQ(s.m, s0.m);
  EXPECT_EQ(s.v, s0.v);
  EXPECT_EQ(s.step, s0.step);
  EXPECT_THROW(adam_step<double>(p, std::vector<double>{NAN, 0.0}, s, 0.001), DivergenceError);
}

TEST(CosineLr, EndpointsAndMidpoint) {
  const LrSchedule s{0.001, 100};
  EXPECT_DOUBLE_EQ(cosine_lr(0, s), 0.001);
  EXPECT_NEAR(cosine_lr(100, s), 0.0, 1e-18);
  EXPECT_NEAR(cosine_lr(50, s), 0.0005, 1e-15);
  EXPECT_EQ(cosine_lr(1000, s), cosine_lr(100, s));
}

TEST(CosineLr, MonotoneAndPure) {
  const LrSchedule s{0.002, 37};
  for (std::size_t i = 1; i <= 37; ++i) {
    EXPECT_LE(cosine_lr(i, s), cosine_lr(i - 1, s));
    EXPECT_EQ(cosine_lr(i, s), cosine_lr(i, s));
  }
  EXPECT_THROW(cosine_lr(0, LrSchedule{0.0, 10}), DomainError);
  EXPECT_THROW(cosine_lr(0, LrSchedule{0.001, 0}), DomainError);
}

}  // namespace
}  // namespace restcn::nn
