// Copyright 2026 The fsbench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "fsbench/error.hpp"
#include "fsbench/rng.hpp"
#include "fsbench/shallow.hpp"
#include "fsbench/trees.hpp"
#include "support.hpp"

namespace fsbench {
namespace {

bool informative_on_top(const ImportanceRanking& r, const SyntheticData& d) {
  const auto top = r.top(d.n_informative);
  const std::set<std::string> got(top.begin(), top.end());
  const std::set<std::string> want(d.truth_order.begin(), d.truth_order.begin() + d.n_informative);
  return got == want;
}

SyntheticData small_planted(std::uint64_t seed) {
  SyntheticSpec spec;
  spec.n_fields = 6;
  spec.n_informative = 2;
  spec.n_samples = 20'000;
  spec.seed = seed;
  return generate_synthetic(spec);
}

TEST(TargetEncoding, SmoothedRate) {
  EXPECT_NEAR(smoothed_rate(0, 100, 0.5, 20), 10.0 / 120.0, 1e-15);
  EXPECT_DOUBLE_EQ(smoothed_rate(0, 0, 0.3, 20), 0.3);
  EXPECT_NEAR(smoothed_rate(90, 100, 0.3, 1e12), 0.3, 1e-9);
}

TEST(TargetEncoding, UsesTrainLabelsOnly) {
  Schema s{FieldSchema{"f", 3}};
  std::vector<std::vector<std::uint32_t>> cols{{1, 1, 2, 2}};
  std::vector<std::uint8_t> y{1, 1, 0, 1};
  std::vector<Split> sp{Split::kTrain, Split::kTrain, Split::kTrain, Split::kTest};
  const auto enc = target_encode(Dataset(s, cols, y, sp), 20);
  const double prior = 2.0 / 3.0;
  EXPECT_DOUBLE_EQ(enc.prior, prior);
  EXPECT_NEAR(enc.columns[0][0], (2 + 20 * prior) / 22.0, 1e-15);
  // The test row has value 2, seen once in train with label 0.
  EXPECT_NEAR(enc.columns[0][3], (0 + 20 * prior) / 21.0, 1e-15);
}

TEST(Gains, NewtonWithSquaredLossIsHalfSse) {
  // Squared loss: g = -(y - p), h = 1. With lambda = 0, gamma = 0 the Newton
  // gain is half the SSE reduction.
  Rng rng(1);
  for (int t = 0; t < 20; ++t) {
    const double sl = rng.uniform(-5, 5), sr = rng.uniform(-5, 5);
    const double nl = 1 + rng.below(30), nr = 1 + rng.below(30);
    EXPECT_NEAR(newton_split_gain(-sl, nl, -sr, nr, 0.0, 0.0), 0.5 * sse_split_gain(sl, nl, sr, nr), 1e-12);
  }
}

TEST(Gains, HeavyRegularizationRemovesGain) {
  EXPECT_NEAR(newton_split_gain(3, 10, -4, 12, 1e15, 0.5), -0.5, 1e-9);
}

TEST(Gains, GiniDecreaseHand) {
  // Perfect split of 2 positives and 2 negatives: parent impurity 0.5 -> 0.
  EXPECT_NEAR(gini_decrease(2, 2, 0, 2), 0.5 * 4, 1e-12);
  EXPECT_NEAR(gini_decrease(1, 2, 1, 2), 0.0, 1e-12);
}

TEST(Boosting, StumpsPutAllGainOnTheSignalField) {
  SyntheticSpec spec;
  spec.n_fields = 5;
  spec.n_informative = 1;
  spec.n_samples = 10'000;
  const auto d = generate_synthetic(spec);
  BoostParams p;
  p.max_depth = 1;
  p.n_trees = 20;
  const auto enc = target_encode(d.dataset);
  const auto ens = fit_boosting(enc, d.dataset, p);
  const std::size_t signal = field_index(d.dataset.schema(), d.truth_order[0]);
  double total = 0.0;
  for (double g : ens.feature_gain) total += g;
  EXPECT_GT(ens.feature_gain[signal] / total, 0.999);
}

TEST(Boosting, HugeLambdaLeavesNoGain) {
  const auto d = small_planted(1);
  BoostParams p;
  p.kind = BoostKind::kNewton;
  p.reg_lambda = 1e18;
  p.n_trees = 3;
  const auto ens = fit_boosting(target_encode(d.dataset), d.dataset, p);
  for (double g : ens.feature_gain) EXPECT_LT(g, 1e-9);
}

TEST(Boosting, ConstantLabelsAreDegenerate) {
  Schema s{FieldSchema{"f", 3}};
  std::vector<std::vector<std::uint32_t>> cols{{1, 2, 1, 2}};
  std::vector<std::uint8_t> y{1, 1, 1, 1};
  std::vector<Split> sp(4, Split::kTrain);
  const Dataset data(s, cols, y, sp);
  EXPECT_THROW(fit_boosting(target_encode(data), data, BoostParams{}), NumericError);
}

TEST(Rankers, RecoverSmallPlantedProblem) {
  const auto d = small_planted(2);
  BoostParams b;
  b.n_trees = 30;
  ForestParams f;
  f.n_trees = 30;
  EXPECT_TRUE(informative_on_top(gbdt_rank(d.dataset, b, 0), d));
  EXPECT_TRUE(informative_on_top(xgb_rank(d.dataset, b, 0), d));
  EXPECT_TRUE(informative_on_top(rf_rank(d.dataset, f, 0), d));
  EXPECT_TRUE(informative_on_top(lasso_rank(d.dataset, LassoParams{}), d));
}

TEST(Rankers, DeterministicGivenSeed) {
  const auto d = small_planted(3);
  ForestParams f;
  f.n_trees = 10;
  EXPECT_EQ(rf_rank(d.dataset, f, 5).to_text(), rf_rank(d.dataset, f, 5).to_text());
}

TEST(Rankers, SingleFieldIsTrivial) {
  SyntheticSpec spec;
  spec.n_fields = 1;
  spec.n_informative = 1;
  spec.n_samples = 2000;
  const auto d = generate_synthetic(spec);
  BoostParams b;
  b.n_trees = 5;
  const auto r = gbdt_rank(d.dataset, b, 0);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r.entries()[0].field, "f00");
}

TEST(Lasso, SoftThreshold) {
  EXPECT_DOUBLE_EQ(soft_threshold(0.5, 0.2), 0.3);
  EXPECT_DOUBLE_EQ(soft_threshold(-0.5, 0.2), -0.3);
  EXPECT_DOUBLE_EQ(soft_threshold(0.1, 0.2), 0.0);
  EXPECT_DOUBLE_EQ(soft_threshold(0.1, 0.0), 0.1);
}

TEST(Lasso, HugeLambdaZeroesEverything) {
  const auto d = small_planted(4);
  LassoParams p;
  p.lambda = 1e6;
  p.epochs = 1;
  const auto r = lasso_rank(d.dataset, p);
  for (const auto& e : r.entries()) EXPECT_EQ(e.score, 0.0);
  EXPECT_EQ(r.entries()[0].field, "f00");  // declaration order on ties
}

TEST(Lasso, ZeroLambdaIsPlainLogisticRegression) {
  const auto d = small_planted(5);
  LassoParams p;
  p.lambda = 0.0;
  p.epochs = 1;
  const auto m = fit_lasso(d.dataset, p);
  std::size_t nonzero = 0;
  for (const auto& w : m.weights)
    for (double v : w) nonzero += v != 0.0;
  EXPECT_GT(nonzero, 0u);
}

}  // namespace
}  // namespace fsbench
