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
#include <vector>

#include <gtest/gtest.h>

#include "fsbench/adam.hpp"
#include "fsbench/backbones.hpp"
#include "fsbench/error.hpp"
#include "fsbench/trainer.hpp"
#include "support.hpp"

namespace fsbench {
namespace {

TEST(Ops, ClosedForms) {
  Tape t;
  Var r = op::relu(t, t.constant(Tensor({1, 2}, {-1.0, 2.0})));
  EXPECT_EQ(t.value(r)[0], 0.0);
  EXPECT_EQ(t.value(r)[1], 2.0);
  EXPECT_DOUBLE_EQ(t.value(op::sigmoid(t, t.constant(Tensor::scalar(0.0)))).item(), 0.5);
  const std::vector<double> y{1.0};
  EXPECT_NEAR(t.value(op::bce_loss(t, t.constant(Tensor::scalar(0.5)), y)).item(), std::log(2.0), 1e-12);
}

TEST(Ops, SquareGradient) {
  Tape t;
  Var x = t.input(Tensor::scalar(3.0));
  Gradients g = t.backward(op::mul(t, x, x));
  EXPECT_DOUBLE_EQ(g[x].item(), 6.0);
}

TEST(Ops, GateOnZeroEmbeddingHasZeroGradient) {
  Tape t;
  Var gate = t.input(Tensor::scalar(1.0));
  Var emb = t.constant(Tensor(2, 3, 0.0));
  Var out = op::scale_rows(t, emb, gate);
  Gradients g = t.backward(op::sum(t, out));
  EXPECT_DOUBLE_EQ(g[gate].item(), 0.0);
}

TEST(Adam, FirstStepHandValue) {
  Parameter w{"w", Tensor::scalar(0.0), Tensor::scalar(1.0)};
  Adam opt({&w});
  opt.step();
  // m_hat = v_hat = g at step 1, so the update is lr * g / (|g| + eps).
  EXPECT_NEAR(w.value.item(), -0.001 / (1.0 + 1e-8), 1e-15);
}

TEST(Adam, ZeroGradientLeavesParameter) {
  Parameter w{"w", Tensor::scalar(0.25), Tensor::scalar(0.0)};
  Adam opt({&w});
  for (int i = 0; i < 5; ++i) opt.step();
  EXPECT_EQ(w.value.item(), 0.25);
}

TEST(Adam, Deterministic) {
  auto run = [] {
    Parameter w{"w", Tensor(1, 3, 0.5), Tensor(1, 3, 0.0)};
    Adam opt({&w});
    for (int i = 0; i < 100; ++i) {
      for (std::size_t j = 0; j < 3; ++j) w.grad[j] = std::sin(w.value[j] * (j + 1) + i);
      opt.step();
    }
    return w.value.storage();
  };
  EXPECT_EQ(run(), run());
}

BackboneConfig small(BackboneKind kind) {
  BackboneConfig c;
  c.kind = kind;
  c.embedding_dim = 4;
  c.mlp_dims = {8};
  return c;
}

TEST(Build, EmbeddingRowsFollowSelection) {
  const Schema s{{"a", 10}, {"b", 20}, {"c", 30}, {"d", 40}};
  EXPECT_EQ(Model::build(small(BackboneKind::kDeepFM), s, {0, 1, 2, 3}, 0).embedding_rows(), 100u);
  EXPECT_EQ(Model::build(small(BackboneKind::kDeepFM), s, {3, 1}, 0).embedding_rows(), 60u);
}

TEST(Build, RejectsBadConfigs) {
  const Schema s{{"a", 10}, {"b", 20}};
  BackboneConfig dcn = small(BackboneKind::kDCN);
  dcn.cross_layers = 0;
  EXPECT_THROW(Model::build(dcn, s, {0, 1}, 0), ConfigError);
  BackboneConfig no_mlp = small(BackboneKind::kWideDeep);
  no_mlp.mlp_dims.clear();
  EXPECT_THROW(Model::build(no_mlp, s, {0, 1}, 0), ConfigError);
  EXPECT_THROW(Model::build(small(BackboneKind::kDeepFM), s, {0, 0}, 0), ConfigError);
  EXPECT_THROW(Model::build(small(BackboneKind::kDeepFM), s, {2}, 0), ConfigError);
}

TEST(Forward, ZeroWeightsGiveBias) {
  const Dataset data = testing::random_dataset(50, {5, 6, 7}, 1);
  for (auto kind : {BackboneKind::kWideDeep, BackboneKind::kDeepFM, BackboneKind::kDCN, BackboneKind::kFibiNet}) {
    Model m = Model::build(small(kind), data.schema(), {0, 1, 2}, 3);
    for (Parameter* p : m.params().all()) p->value.fill(0.0);
    const auto rows = data.rows_of(Split::kTrain);
    const Batch b = make_batch(data, m.selected_fields(), std::vector<std::size_t>(rows.begin(), rows.begin() + 4));
    Tape t(false);
    Var logits = m.forward(t, b);
    for (double v : t.value(logits).data()) EXPECT_EQ(v, 0.0) << to_string(kind);
    m.output_bias().value.fill(0.7);
    Tape t2(false);
    Var logits2 = m.forward(t2, b);
    for (double v : t2.value(logits2).data()) EXPECT_DOUBLE_EQ(v, 0.7) << to_string(kind);
  }
}

TEST(Blocks, FmPairwiseHandValue) {
  Tape t;
  Var e = t.constant(Tensor({1, 4}, {1, 0, 0, 0}));
  const Var es[] = {e, e};
  EXPECT_DOUBLE_EQ(t.value(blocks::fm_pairwise(t, es)).item(), 1.0);
  Var a = t.constant(Tensor({1, 2}, {1, 2}));
  Var b = t.constant(Tensor({1, 2}, {3, 4}));
  Var c = t.constant(Tensor({1, 2}, {-1, 1}));
  const Var three[] = {a, b, c};
  // <a,b> + <a,c> + <b,c> = 11 + 1 + 1
  EXPECT_DOUBLE_EQ(t.value(blocks::fm_pairwise(t, three)).item(), 13.0);
}

TEST(Blocks, CrossLayerClosedForm) {
  Tape t;
  const Tensor x0({2, 3}, {1, 2, 3, -1, 0, 2});
  const Tensor xl({2, 3}, {0.5, -1, 2, 1, 1, 1});
  const Tensor w({3, 1}, {0.2, -0.1, 0.3});
  const Tensor b({1, 3}, {0.01, 0.02, 0.03});
  Var out = blocks::cross_layer(t, t.constant(x0), t.constant(xl), t.constant(w), t.constant(b));
  for (std::size_t r = 0; r < 2; ++r) {
    double dot = 0.0;
    for (std::size_t j = 0; j < 3; ++j) dot += xl.at(r, j) * w[j];
    for (std::size_t j = 0; j < 3; ++j) {
      EXPECT_NEAR(t.value(out).at(r, j), x0.at(r, j) * dot + b[j] + xl.at(r, j), 1e-15);
    }
  }
}

TEST(Blocks, BilinearPairCount) {
  Tape t;
  std::vector<Var> es;
  for (int f = 0; f < 5; ++f) es.push_back(t.constant(Tensor(2, 3, 0.1 * f)));
  Var w = t.constant(Tensor(3, 3, 0.5));
  EXPECT_EQ(blocks::bilinear_pairs(t, es, w).size(), 10u);
}

TEST(Checkpoint, RoundTripPreservesPredictions) {
  const Dataset data = testing::random_dataset(300, {5, 6, 7, 3}, 2);
  for (auto kind : {BackboneKind::kWideDeep, BackboneKind::kDeepFM, BackboneKind::kDCN, BackboneKind::kFibiNet}) {
    Model m = Model::build(small(kind), data.schema(), {0, 2, 3}, 9);
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.batch_size = 64;
    train(m, data, cfg);
    const Model back = Model::decode_checkpoint(m.encode_checkpoint(), data.schema());
    EXPECT_EQ(back.config().kind, kind);
    EXPECT_EQ(std::vector<std::size_t>(back.selected_fields().begin(), back.selected_fields().end()),
              (std::vector<std::size_t>{0, 2, 3}));
    EXPECT_EQ(m.predict(data, Split::kTest), back.predict(data, Split::kTest)) << to_string(kind);
  }
}

TEST(Checkpoint, RejectsCorruptBytes) {
  const Schema s{{"a", 3}};
  EXPECT_THROW(Model::decode_checkpoint("not a checkpoint", s), ConfigError);
}

TEST(Train, LearnsPlantedSignalOnEveryBackbone) {
  SyntheticSpec spec;
  spec.n_fields = 6;
  spec.n_informative = 6;
  spec.n_samples = 50'000;
  spec.seed = 3;
  const Dataset data = generate_synthetic(spec).dataset;
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 512;
  for (auto kind : {BackboneKind::kWideDeep, BackboneKind::kDeepFM, BackboneKind::kDCN, BackboneKind::kFibiNet}) {
    BackboneConfig bc;
    bc.kind = kind;
    Model m = Model::build(bc, data.schema(), {0, 1, 2, 3, 4, 5}, 1);
    const TrainResult r = train(m, data, cfg);
    EXPECT_GE(r.test.auc, 0.75) << to_string(kind);
  }
}

TEST(Train, PureNoiseStaysAtChance) {
  SyntheticSpec spec;
  spec.n_fields = 5;
  spec.n_informative = 0;
  spec.n_samples = 40'000;
  const Dataset data = generate_synthetic(spec).dataset;
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 512;
  Model m = Model::build(BackboneConfig{}, data.schema(), {0, 1, 2, 3, 4}, 0);
  EXPECT_NEAR(train(m, data, cfg).test.auc, 0.5, 0.02);
}

TEST(Train, SameSeedSameResult) {
  const Dataset data = testing::random_dataset(2000, {5, 6, 7}, 4);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 128;
  auto once = [&] {
    Model m = Model::build(small(BackboneKind::kDeepFM), data.schema(), {0, 1, 2}, 5);
    return train(m, data, cfg).test.auc;
  };
  EXPECT_EQ(once(), once());
}

TEST(Train, EarlyStoppingRespectsPatience) {
  const Dataset data = testing::random_dataset(3000, {5, 6, 7}, 5);
  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.batch_size = 64;
  cfg.patience = 1;
  Model m = Model::build(small(BackboneKind::kDeepFM), data.schema(), {0, 1, 2}, 5);
  const TrainResult r = train(m, data, cfg);
  EXPECT_LT(r.history.size(), 30u);
  EXPECT_LE(r.history.size(), r.best_epoch + 2);
}

}  // namespace
}  // namespace fsbench
