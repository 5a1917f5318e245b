// Copyright 2026 The flsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "flsim/defense.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "flsim/errors.h"
#include "test_util.h"

namespace flsim {
namespace {

using ::flsim::testing::RandomParams;

ModelSpecPtr FlatSpec(int n) {
  // n - 1 weights plus one bias.
  return MakeModelSpec({n - 1, 1}, Activation::kIdentity,
                       LossKind::kMeanSquaredError);
}

ParamVec Vec(const ModelSpecPtr& spec, std::vector<double> v) {
  return ParamVec(spec, Eigen::Map<Vector>(v.data(), v.size()));
}

std::vector<ParamVec> Column(const ModelSpecPtr& spec,
                             const std::vector<double>& values) {
  std::vector<ParamVec> models;
  for (double v : values) models.push_back(Vec(spec, {v, 0.0}));
  return models;
}

// Reference median: full sort of a copy.
double SortedMedian(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

double TrimmedMean(std::vector<double> v, size_t trim) {
  std::sort(v.begin(), v.end());
  double sum = 0.0;
  for (size_t i = trim; i + trim < v.size(); ++i) sum += v[i];
  return sum / static_cast<double>(v.size() - 2 * trim);
}

TEST(FlwbcStepTest, FirstBatchOnlyRecordsHistory) {
  auto spec = FlatSpec(4);
  RngStream rng(1);
  FlwbcState state;
  const ParamVec before = RandomParams(spec, rng);
  const ParamVec after = RandomParams(spec, rng);
  const FlwbcStepResult r = FlwbcStep(state, before, after, 0.1, 1.0, rng);
  EXPECT_TRUE(r.params == after);
  EXPECT_EQ(r.masked, 0u);
  EXPECT_TRUE(state.first_batch_done);
  EXPECT_TRUE(state.w_minus_1 == before);
}

TEST(FlwbcStepTest, HistoryAdvancesOncePerBatch) {
  auto spec = FlatSpec(3);
  RngStream rng(2);
  FlwbcState state;
  std::vector<ParamVec> w;
  for (int i = 0; i < 4; ++i) w.push_back(RandomParams(spec, rng));
  FlwbcStep(state, w[0], w[1], 0.1, 0.5, rng);
  FlwbcStep(state, w[1], w[2], 0.1, 0.5, rng);
  EXPECT_TRUE(state.w_minus_1 == w[1]);
  EXPECT_TRUE(state.w_minus_2 == w[0]);
  FlwbcStep(state, w[2], w[3], 0.1, 0.5, rng);
  EXPECT_TRUE(state.w_minus_1 == w[2]);
  EXPECT_TRUE(state.w_minus_2 == w[1]);
}

TEST(FlwbcStepTest, ZeroNoiseIsBitwiseIdentity) {
  auto spec = FlatSpec(6);
  RngStream rng(3);
  FlwbcState state;
  ParamVec w = RandomParams(spec, rng);
  ParamVec zero = ParamVec::Zeros(spec);
  zero[1] = -0.0;
  for (int i = 0; i < 10; ++i) {
    const ParamVec next = i == 5 ? zero : RandomParams(spec, rng);
    const FlwbcStepResult r = FlwbcStep(state, w, next, 0.2, 0.0, rng);
    EXPECT_TRUE(r.params == next);
    EXPECT_EQ(std::signbit(r.params[1]), std::signbit(next[1]));
    w = r.params;
  }
}

TEST(FlwbcStepTest, MaskComparesAgainstTheDrawnNoise) {
  auto spec = FlatSpec(3);
  const double eta = 0.5;
  RngStream rng(4);
  RngStream preview = rng;
  LaplaceNoise(spec, 1.0, preview);  // first batch draw
  const ParamVec upsilon = LaplaceNoise(spec, 1.0, preview);

  FlwbcState state;
  const ParamVec zero = ParamVec::Zeros(spec);
  FlwbcStep(state, zero, zero, eta, 1.0, rng);
  // With w_before == w_minus_1 == 0 the second difference is w_after itself.
  // Coordinate 0 sits well inside the noise, 1 on the boundary, 2 outside.
  ParamVec after = ParamVec::Zeros(spec);
  after[0] = 0.1 * eta * std::abs(upsilon[0]);
  after[1] = eta * std::abs(upsilon[1]);
  after[2] = 2.0 * eta * std::abs(upsilon[2]);
  const FlwbcStepResult r = FlwbcStep(state, zero, after, eta, 1.0, rng);
  EXPECT_TRUE(r.noise == upsilon);
  EXPECT_EQ(r.masked, 2u);
  EXPECT_EQ(r.params[0], after[0] + eta * upsilon[0]);
  EXPECT_EQ(r.params[1], after[1] + eta * upsilon[1]);
  EXPECT_EQ(r.params[2], after[2]);
}

TEST(FlwbcStepTest, ConstantGradientPerturbsEverything) {
  // A linear loss moves W by the same step every batch, so W* = 0.
  auto spec = FlatSpec(5);
  const double eta = 0.1;
  RngStream rng(5);
  const ParamVec step = RandomParams(spec, rng);
  FlwbcState state;
  ParamVec w = ParamVec::Zeros(spec);
  // Exact binary values keep the second difference at exactly zero.
  ParamVec exact_step = ParamVec::Zeros(spec);
  for (size_t j = 0; j < exact_step.size(); ++j) {
    exact_step[j] = std::ldexp(std::round(std::ldexp(step[j], 10)), -10);
  }
  ParamVec w_prev = w;
  for (int i = 0; i < 4; ++i) {
    const ParamVec after = w - exact_step;
    const FlwbcStepResult r = FlwbcStep(state, w, after, eta, 0.3, rng);
    if (i == 0) {
      EXPECT_TRUE(r.params == after);
    } else {
      EXPECT_EQ(r.masked, spec->num_params());
      EXPECT_TRUE(r.params == after + eta * r.noise);
    }
    // Feed the unperturbed trajectory so W* stays zero.
    w = after;
  }
}

TEST(FlwbcStepTest, PerturbationIsDominatedByTheNoise) {
  auto spec = MakeModelSpec({6, 4, 3}, Activation::kRelu,
                            LossKind::kSoftmaxCrossEntropy);
  RngStream rng(6);
  FlwbcState state;
  ParamVec w = RandomParams(spec, rng);
  for (int i = 0; i < 50; ++i) {
    const ParamVec after = w + 0.01 * RandomParams(spec, rng);
    const FlwbcStepResult r = FlwbcStep(state, w, after, 0.05, 0.4, rng);
    const ParamVec perturbation = r.params - after;
    EXPECT_LE(perturbation.Norm(), (0.05 * r.noise).Norm() * (1 + 1e-12));
    for (size_t j = 0; j < perturbation.size(); ++j) {
      EXPECT_LE(std::abs(perturbation[j]),
                std::abs(0.05 * r.noise[j]) * (1 + 1e-12) + 1e-300);
    }
    w = r.params;
  }
}

TEST(FlwbcStepTest, RejectsNonPositiveEta) {
  auto spec = FlatSpec(2);
  RngStream rng(7);
  FlwbcState state;
  EXPECT_THROW(FlwbcStep(state, ParamVec::Zeros(spec), ParamVec::Zeros(spec),
                         0.0, 1.0, rng),
               ConfigError);
}

TEST(CmaTest, Fixtures) {
  auto spec = FlatSpec(2);
  EXPECT_DOUBLE_EQ(CmaAggregate(Column(spec, {0.1, 0.5, 0.9}))[0], 0.5);
  EXPECT_DOUBLE_EQ(CmaAggregate(Column(spec, {1, 2, 3, 100}))[0], 2.5);
  RngStream rng(8);
  const std::vector<ParamVec> one = {RandomParams(spec, rng)};
  EXPECT_TRUE(CmaAggregate(one) == one[0]);
}

TEST(CmaTest, MatchesSortedMedianOnRandomFixtures) {
  RngStream rng(9);
  for (int trial = 0; trial < 1000; ++trial) {
    const int k = 1 + static_cast<int>(rng.UniformIndex(12));
    auto spec = FlatSpec(2 + static_cast<int>(rng.UniformIndex(6)));
    std::vector<ParamVec> models;
    for (int i = 0; i < k; ++i) models.push_back(RandomParams(spec, rng, 5.0));
    const ParamVec median = CmaAggregate(models);
    for (size_t j = 0; j < median.size(); ++j) {
      std::vector<double> column;
      for (const auto& m : models) column.push_back(m[j]);
      EXPECT_EQ(median[j], SortedMedian(column));
    }
  }
}

TEST(CmaTest, PermutationAndCorruptionInvariance) {
  auto spec = FlatSpec(4);
  RngStream rng(10);
  std::vector<ParamVec> models;
  const ParamVec honest = RandomParams(spec, rng);
  for (int i = 0; i < 4; ++i) models.push_back(honest);
  for (int i = 0; i < 3; ++i) models.push_back(RandomParams(spec, rng, 1e6));
  const ParamVec median = CmaAggregate(models);
  EXPECT_TRUE(median == honest);
  std::vector<size_t> order(models.size());
  std::iota(order.begin(), order.end(), 0);
  for (int trial = 0; trial < 20; ++trial) {
    rng.Shuffle(order);
    std::vector<ParamVec> shuffled;
    for (size_t i : order) shuffled.push_back(models[i]);
    EXPECT_TRUE(CmaAggregate(shuffled) == median);
  }
}

TEST(CtmaTest, Fixtures) {
  auto spec = FlatSpec(2);
  const auto five = Column(spec, {0, 1, 2, 3, 100});
  EXPECT_DOUBLE_EQ(CtmaAggregate(five, 0.2)[0], 2.0);
  EXPECT_DOUBLE_EQ(CtmaAggregate(five, 0.4)[0], 2.0);
  EXPECT_DOUBLE_EQ(CtmaAggregate(five, 0.0)[0], 106.0 / 5.0);
  double previous = INFINITY;
  for (double beta = 0.0; beta <= 0.4 + 1e-12; beta += 0.05) {
    const double value = CtmaAggregate(five, beta)[0];
    EXPECT_LE(value, previous) << beta;
    previous = value;
  }
}

TEST(CtmaTest, BetaZeroIsTheMeanAndFiveAtPointFourIsTheMedian) {
  RngStream rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    auto spec = FlatSpec(6);
    const int k = 1 + static_cast<int>(rng.UniformIndex(10));
    std::vector<ParamVec> models;
    for (int i = 0; i < k; ++i) models.push_back(RandomParams(spec, rng, 3.0));
    const ParamVec trimmed = CtmaAggregate(models, 0.0);
    for (size_t j = 0; j < trimmed.size(); ++j) {
      double mean = 0.0;
      for (const auto& m : models) mean += m[j];
      mean /= k;
      EXPECT_NEAR(trimmed[j], mean, 1e-12);
    }
    std::vector<ParamVec> five(models.begin(), models.begin() + std::min(k, 5));
    while (five.size() < 5) five.push_back(RandomParams(spec, rng));
    EXPECT_TRUE(CtmaAggregate(five, 0.4) == CmaAggregate(five));
  }
}

TEST(CtmaTest, MatchesSortedTrimmedMean) {
  RngStream rng(12);
  for (int trial = 0; trial < 300; ++trial) {
    auto spec = FlatSpec(3);
    const int k = 1 + static_cast<int>(rng.UniformIndex(12));
    const double beta = 0.45 * rng.Uniform01();
    const size_t trim = static_cast<size_t>(std::floor(beta * k));
    if (2 * trim >= static_cast<size_t>(k)) continue;
    std::vector<ParamVec> models;
    for (int i = 0; i < k; ++i) models.push_back(RandomParams(spec, rng));
    const ParamVec out = CtmaAggregate(models, beta);
    for (size_t j = 0; j < out.size(); ++j) {
      std::vector<double> column;
      for (const auto& m : models) column.push_back(m[j]);
      EXPECT_NEAR(out[j], TrimmedMean(column, trim), 1e-12);
    }
  }
}

TEST(CtmaTest, BetaOutsideRangeIsAConfigError) {
  auto spec = FlatSpec(2);
  EXPECT_DOUBLE_EQ(CtmaAggregate(Column(spec, {1, 2}), 0.49)[0], 1.5);
  EXPECT_THROW(CtmaAggregate(Column(spec, {1, 2, 3}), 0.5), ConfigError);
  EXPECT_THROW(CtmaAggregate(Column(spec, {1, 2, 3}), 0.6), ConfigError);
  EXPECT_THROW(CtmaAggregate(Column(spec, {1, 2, 3}), -0.1), ConfigError);
}

TEST(CdpTest, NoNoiseNoClipIsFedAvg) {
  auto spec = FlatSpec(4);
  RngStream rng(13);
  const ParamVec prev = RandomParams(spec, rng);
  std::vector<ParamVec> models;
  for (int i = 0; i < 3; ++i) models.push_back(prev + 0.1 * RandomParams(spec, rng));
  const std::vector<double> weights = {0.2, 0.3, 0.5};
  const ParamVec out = CdpApply(models, weights, prev, 100.0, 0.0, rng);
  ParamVec expected = ParamVec::Zeros(spec);
  for (int i = 0; i < 3; ++i) expected.Axpy(weights[i], models[i]);
  EXPECT_LE((out - expected).Norm(), 1e-14);
}

TEST(CdpTest, LongUpdateIsClippedToTheBound) {
  auto spec = FlatSpec(2);
  RngStream rng(14);
  const ParamVec prev = Vec(spec, {1.0, 1.0});
  const std::vector<ParamVec> models = {Vec(spec, {13.0, 17.0})};  // norm 20
  const std::vector<double> weights = {1.0};
  const ParamVec out = CdpApply(models, weights, prev, 5.0, 0.0, rng);
  EXPECT_NEAR((out - prev).Norm(), 5.0, 1e-12);
  EXPECT_NEAR(out[0], 4.0, 1e-12);
  EXPECT_NEAR(out[1], 5.0, 1e-12);
}

TEST(CdpTest, AppliedUpdatesRespectTheClip) {
  RngStream rng(15);
  for (int trial = 0; trial < 200; ++trial) {
    auto spec = FlatSpec(5);
    const ParamVec prev = RandomParams(spec, rng);
    const int k = 1 + static_cast<int>(rng.UniformIndex(6));
    std::vector<ParamVec> models;
    std::vector<double> weights;
    for (int i = 0; i < k; ++i) {
      models.push_back(prev + RandomParams(spec, rng, 1.0 + trial % 7));
      weights.push_back(1.0 / k);
    }
    const double clip = 0.5 + rng.Uniform01();
    // With no noise, the applied update is the average of clipped updates.
    const ParamVec out = CdpApply(models, weights, prev, clip, 0.0, rng);
    EXPECT_LE((out - prev).Norm(), clip * (1 + 1e-12));
    for (const auto& m : models) EXPECT_LE(ClipToNorm(m - prev, clip).Norm(), clip);
  }
}

TEST(CdpTest, NoiseStdShrinksWithTheNumberOfClients) {
  auto spec = FlatSpec(2);
  RngStream rng(16);
  const ParamVec prev = ParamVec::Zeros(spec);
  for (int k : {1, 4}) {
    const std::vector<ParamVec> models(k, prev);
    const std::vector<double> weights(k, 1.0 / k);
    const int trials = 10000;
    double sum_sq = 0.0;
    int count = 0;
    for (int t = 0; t < trials; ++t) {
      const ParamVec out = CdpApply(models, weights, prev, 5.0, 0.8, rng);
      for (size_t j = 0; j < out.size(); ++j, ++count) sum_sq += out[j] * out[j];
    }
    const double empirical = std::sqrt(sum_sq / count);
    EXPECT_NEAR(empirical / (0.8 / k), 1.0, 0.02) << "K=" << k;
  }
}

TEST(LdpTest, ZeroSigmaIsPureClipping) {
  auto spec = FlatSpec(2);
  RngStream rng(17);
  const ParamVec update = Vec(spec, {12.0, 16.0});
  EXPECT_TRUE(LdpApply(update, 5.0, 0.0, rng) == ClipToNorm(update, 5.0));
  const ParamVec small = Vec(spec, {0.3, 0.4});
  EXPECT_TRUE(LdpApply(small, 5.0, 0.0, rng) == small);
}

TEST(LdpTest, ZeroUpdateIsPureNoise) {
  auto spec = FlatSpec(100);
  RngStream rng(18);
  double sum_sq = 0.0;
  int count = 0;
  for (int t = 0; t < 1000; ++t) {
    const ParamVec out = LdpApply(ParamVec::Zeros(spec), 1.0, 0.3, rng);
    for (size_t j = 0; j < out.size(); ++j, ++count) sum_sq += out[j] * out[j];
  }
  EXPECT_NEAR(std::sqrt(sum_sq / count) / 0.3, 1.0, 0.02);
}

TEST(LdpTest, ClippingPrecedesNoise) {
  auto spec = FlatSpec(8);
  RngStream rng(19);
  for (int trial = 0; trial < 200; ++trial) {
    const ParamVec update = RandomParams(spec, rng, 1.0 + trial);
    RngStream noise_rng(1000 + trial);
    RngStream replay = noise_rng;
    const ParamVec out = LdpApply(update, 2.0, 0.5, noise_rng);
    const ParamVec noise = LaplaceNoise(spec, 0.5, replay);
    EXPECT_TRUE(out == ClipToNorm(update, 2.0) + noise);
    EXPECT_LE(ClipToNorm(update, 2.0).Norm(), 2.0);
  }
}

}  // namespace
}  // namespace flsim
