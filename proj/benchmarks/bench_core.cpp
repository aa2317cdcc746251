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

#include <numeric>
#include <vector>

#include <benchmark/benchmark.h>

#include "fsbench/backbones.hpp"
#include "fsbench/dataio.hpp"
#include "fsbench/metrics.hpp"
#include "fsbench/rng.hpp"
#include "fsbench/shallow.hpp"
#include "fsbench/tape.hpp"
#include "fsbench/trees.hpp"

namespace {

using namespace fsbench;

const SyntheticData& planted() {
  static const SyntheticData data = [] {
    SyntheticSpec spec;
    spec.n_samples = 20'000;
    return generate_synthetic(spec);
  }();
  return data;
}

std::vector<std::size_t> all_fields(const Dataset& d) {
  std::vector<std::size_t> f(d.num_fields());
  std::iota(f.begin(), f.end(), std::size_t{0});
  return f;
}

void BM_Auc(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  std::vector<double> scores(n);
  std::vector<std::uint8_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    scores[i] = rng.uniform();
    labels[i] = rng.bernoulli(0.3);
  }
  for (auto _ : state) benchmark::DoNotOptimize(auc(scores, labels));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}
BENCHMARK(BM_Auc)->Arg(1 << 12)->Arg(1 << 16);

void BM_ForwardBackward(benchmark::State& state) {
  const auto& data = planted().dataset;
  BackboneConfig cfg;
  cfg.kind = static_cast<BackboneKind>(state.range(0));
  Model model = Model::build(cfg, data.schema(), all_fields(data), 0);
  const auto rows = data.rows_of(Split::kTrain).subspan(0, 512);
  const Batch batch = make_batch(data, all_fields(data), rows);
  for (auto _ : state) {
    Tape tape;
    Var p = op::sigmoid(tape, model.forward(tape, batch));
    tape.backward(op::bce_loss(tape, p, batch.labels));
    model.params().zero_grad();
  }
  state.SetLabel(std::string(to_string(cfg.kind)));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * batch.size()));
}
BENCHMARK(BM_ForwardBackward)->DenseRange(0, 3)->Unit(benchmark::kMicrosecond);

void BM_BoostingTree(benchmark::State& state) {
  const auto& data = planted().dataset;
  const auto enc = target_encode(data);
  BoostParams p;
  p.n_trees = 1;
  p.kind = static_cast<BoostKind>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(fit_boosting(enc, data, p));
}
BENCHMARK(BM_BoostingTree)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_LassoEpoch(benchmark::State& state) {
  const auto& data = planted().dataset;
  LassoParams p;
  p.epochs = 1;
  for (auto _ : state) benchmark::DoNotOptimize(fit_lasso(data, p));
}
BENCHMARK(BM_LassoEpoch)->Unit(benchmark::kMillisecond);

void BM_Spearman(benchmark::State& state) {
  const auto& data = planted().dataset;
  Rng rng(2);
  std::vector<double> a(data.num_fields()), b(data.num_fields());
  for (auto& x : a) x = rng.uniform();
  for (auto& x : b) x = rng.uniform();
  const auto ra = ImportanceRanking::from_scores(data.schema(), a, "a", 0);
  const auto rb = ImportanceRanking::from_scores(data.schema(), b, "b", 0);
  for (auto _ : state) benchmark::DoNotOptimize(spearman(ra, rb));
}
BENCHMARK(BM_Spearman);

}  // namespace

BENCHMARK_MAIN();
