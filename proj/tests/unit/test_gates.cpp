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

#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "fsbench/error.hpp"
#include "fsbench/gates.hpp"
#include "support.hpp"

namespace fsbench {
namespace {

using testing::random_dataset;

std::vector<std::size_t> iota(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

Batch first_rows(const Dataset& data, std::size_t n) {
  const auto rows = data.rows_of(Split::kTrain).subspan(0, n);
  return make_batch(data, iota(data.num_fields()), rows);
}

BackboneConfig small_backbone() {
  BackboneConfig cfg;
  cfg.embedding_dim = 4;
  cfg.mlp_dims = {8};
  return cfg;
}

TEST(Lpfs, GateClosedForm) {
  EXPECT_DOUBLE_EQ(lpfs_gate(0.0, 0.1), 0.0);
  EXPECT_DOUBLE_EQ(lpfs_gate(1.0, 1.0), 0.5);
  EXPECT_NEAR(lpfs_gate(2.0, 0.1), 4.0 / 4.1, 1e-15);
  EXPECT_DOUBLE_EQ(lpfs_gate(-2.0, 0.1), lpfs_gate(2.0, 0.1));
  // Shrinking epsilon sharpens the gate towards a step.
  EXPECT_GT(lpfs_gate(0.1, 1e-6), 0.999);
}

TEST(Lpfs, EpsilonDecaysPerEpoch) {
  const auto data = random_dataset(200, {4, 5}, 1);
  auto model = Model::build(small_backbone(), data.schema(), iota(2), 0);
  LpfsParams p;
  p.eps0 = 0.2;
  p.delta = 0.5;
  LpfsGates gates(model, p);
  gates.on_epoch_begin(3);
  EXPECT_DOUBLE_EQ(gates.epsilon(), 0.2 * 0.125);
  EXPECT_NEAR(gates.gate_value(0), 1.0 / (1.0 + 0.025), 1e-15);
}

TEST(Lpfs, RejectsBadParameters) {
  const auto data = random_dataset(200, {4}, 1);
  auto model = Model::build(small_backbone(), data.schema(), iota(1), 0);
  LpfsParams p;
  p.delta = 1.0;
  EXPECT_THROW(LpfsGates(model, p), ConfigError);
  p = {};
  p.eps0 = 0.0;
  EXPECT_THROW(LpfsGates(model, p), ConfigError);
}

TEST(AdaFS, WeightsAreADistributionPerSample) {
  const auto data = random_dataset(300, {4, 5, 6}, 2);
  auto model = Model::build(small_backbone(), data.schema(), iota(3), 0);
  AdaFSController ctl(model, AdaFSParams{}, 0);
  const Batch batch = first_rows(data, 17);
  Tape tape(false);
  model.forward(tape, batch, &ctl);
  const Tensor& w = tape.value(ctl.weights());
  ASSERT_EQ(w.rows(), 17u);
  ASSERT_EQ(w.cols(), 3u);
  for (std::size_t r = 0; r < w.rows(); ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < w.cols(); ++c) {
      EXPECT_GT(w.at(r, c), 0.0);
      s += w.at(r, c);
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(AdaFS, SingleFieldWeightIsOne) {
  const auto data = random_dataset(300, {7}, 3);
  auto model = Model::build(small_backbone(), data.schema(), iota(1), 0);
  AdaFSController ctl(model, AdaFSParams{}, 0);
  Tape tape(false);
  model.forward(tape, first_rows(data, 9), &ctl);
  const Tensor& w = tape.value(ctl.weights());
  for (std::size_t r = 0; r < w.rows(); ++r) EXPECT_DOUBLE_EQ(w.at(r, 0), 1.0);
}

TEST(AdaFS, KeepsEveryField) {
  const auto data = random_dataset(1500, {4, 5}, 4);
  TrainConfig t;
  t.epochs = 1;
  t.batch_size = 256;
  const auto out = adafs_train(data, small_backbone(), t, AdaFSParams{});
  EXPECT_EQ(out.kept_fields, iota(2));
  EXPECT_FALSE(out.ranking.has_value());
}

TEST(AutoField, GatesStartAtOneHalfAndStayWithZeroLearningRate) {
  const auto data = random_dataset(1500, {4, 5, 6}, 5);
  auto model = Model::build(small_backbone(), data.schema(), iota(3), 0);
  AutoFieldParams p;
  p.gate_learning_rate = 0.0;
  AutoFieldGates gates(model, data, p, 0);
  for (std::size_t s = 0; s < 3; ++s) EXPECT_DOUBLE_EQ(gates.keep_probability(s), 0.5);
  TrainConfig t;
  t.epochs = 1;
  t.batch_size = 256;
  train(model, data, t, &gates);
  for (std::size_t s = 0; s < 3; ++s) EXPECT_DOUBLE_EQ(gates.keep_probability(s), 0.5);
}

TEST(AutoField, GateUpdatesNeverTouchModelWeights) {
  const auto data = random_dataset(1500, {4, 5}, 6);
  auto model = Model::build(small_backbone(), data.schema(), iota(2), 0);
  AutoFieldGates gates(model, data, AutoFieldParams{.gate_learning_rate = 0.1}, 0);
  const auto before = model.params().snapshot();
  const auto rows = data.rows_of(Split::kVal).subspan(0, 64);
  gates.val_step(model, make_batch(data, iota(2), rows));
  const auto after = model.params().snapshot();
  for (std::size_t i = 0; i < before.size(); ++i) {
    for (std::size_t j = 0; j < before[i].size(); ++j) ASSERT_EQ(before[i][j], after[i][j]);
  }
  EXPECT_NE(gates.keep_probability(0), 0.5);
}

TEST(OptFS, FreshGatesKeepEverything) {
  const auto data = random_dataset(300, {4, 5}, 7);
  auto model = Model::build(small_backbone(), data.schema(), iota(2), 0);
  OptFSGates gates(model, OptFSParams{}, 3);
  const auto mask = gates.keep_mask(model);
  EXPECT_EQ(mask.kept_rows(), mask.total_rows());
  EXPECT_EQ(mask.total_rows(), 9u);
}

TEST(OptFS, SchedulesTemperatureAndSparsity) {
  const auto data = random_dataset(300, {4}, 8);
  auto model = Model::build(small_backbone(), data.schema(), iota(1), 0);
  OptFSParams p;
  p.tau0 = 2.0;
  p.gamma = 0.5;
  p.lambda_max = 0.3;
  OptFSGates gates(model, p, 3);
  gates.on_epoch_begin(0);
  EXPECT_DOUBLE_EQ(gates.tau(), 2.0);
  EXPECT_DOUBLE_EQ(gates.lambda(), 0.1);
  gates.on_epoch_begin(2);
  EXPECT_DOUBLE_EQ(gates.tau(), 0.5);
  EXPECT_DOUBLE_EQ(gates.lambda(), 0.3);
}

TEST(OptFS, LargeSparsityWeightDropsValues) {
  const auto data = random_dataset(4000, {6, 6, 6}, 9);
  TrainConfig t;
  t.epochs = 4;
  t.batch_size = 128;
  t.early_stop = false;
  OptFSParams p;
  p.lambda_max = 100.0;
  const auto out = optfs_search(data, small_backbone(), t, p);
  EXPECT_LT(out.mask.kept_rows(), out.mask.total_rows() / 2);
}

TEST(ValueMask, EncodeDecodeRoundTrip) {
  ValueMask m;
  m.fields = {"a", "bb"};
  m.keep = {{true, false, true}, std::vector<bool>(19, false)};
  m.keep[1][0] = m.keep[1][8] = m.keep[1][18] = true;
  const auto back = ValueMask::decode(m.encode());
  EXPECT_EQ(back.fields, m.fields);
  EXPECT_EQ(back.keep, m.keep);
  EXPECT_EQ(m.kept_rows(), 5u);
  EXPECT_EQ(m.total_rows(), 22u);
  EXPECT_NEAR(m.keep_rate(1), 3.0 / 19.0, 1e-15);
}

TEST(ValueMask, CorruptBytesRejected) {
  ValueMask m;
  m.fields = {"a"};
  m.keep = {{true, false}};
  std::string bytes = m.encode();
  EXPECT_THROW(ValueMask::decode(bytes.substr(0, bytes.size() - 1)), Error);
  bytes[0] ^= 0x5a;
  EXPECT_THROW(ValueMask::decode(bytes), Error);
}

TEST(ValueMaskHook, ZeroesDroppedValuesOnly) {
  const auto data = random_dataset(300, {3}, 10);
  auto model = Model::build(small_backbone(), data.schema(), iota(1), 0);
  ValueMask m;
  m.fields = {data.schema()[0].name};
  m.keep = {{true, false, true}};
  ValueMaskHook hook(model, m);
  Tape tape(false);
  const std::vector<std::uint32_t> values{0, 1, 2, 1};
  const auto g = hook.gate(tape, 0, values, Var{});
  ASSERT_TRUE(g.has_value());
  const Tensor& t = tape.value(*g);
  EXPECT_EQ(t[0], 1.0);
  EXPECT_EQ(t[1], 0.0);
  EXPECT_EQ(t[2], 1.0);
  EXPECT_EQ(t[3], 0.0);
  m.keep = {{true, false}};
  EXPECT_THROW(ValueMaskHook(model, m), DimensionError);
}

TEST(FieldMaskHook, MaskedFieldContributesNothing) {
  // With its only field masked, the model reduces to its output bias.
  const auto data = random_dataset(300, {5}, 11);
  auto model = Model::build(small_backbone(), data.schema(), iota(1), 3);
  model.output_bias().value.fill(0.7);
  FieldMaskHook hook({0.0});
  const auto p = model.predict(data, Split::kTest, &hook);
  for (double v : p) EXPECT_NEAR(v, 1.0 / (1.0 + std::exp(-0.7)), 1e-12);
}

}  // namespace
}  // namespace fsbench
