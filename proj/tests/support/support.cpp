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

#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "fsbench/rng.hpp"

namespace fsbench::testing {

double auc_pairwise(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  double wins = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!labels[i]) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j]) continue;
      ++pairs;
      if (scores[i] > scores[j]) {
        wins += 1.0;
      } else if (scores[i] == scores[j]) {
        wins += 0.5;
      }
    }
  }
  return wins / static_cast<double>(pairs);
}

double aukc_trapezoid(std::span<const double> auc_by_k) {
  // Area between the curve (anchored at 0.5 for k = 0) and the 0.5 line,
  // each unit-width trapezoid doubled so a perfect curve approaches 1.
  double area = 0.0;
  double prev = 0.5;
  for (double a : auc_by_k) {
    area += ((a - 0.5) + (prev - 0.5));
    prev = a;
  }
  return area / static_cast<double>(auc_by_k.size());
}

Dataset random_dataset(std::size_t rows, std::vector<std::size_t> vocabs, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<std::uint32_t>> cols(vocabs.size(), std::vector<std::uint32_t>(rows));
  std::vector<std::uint8_t> labels(rows);
  Schema schema;
  for (std::size_t f = 0; f < vocabs.size(); ++f) schema.push_back({fmt::format("x{}", f), vocabs[f]});
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t f = 0; f < vocabs.size(); ++f) cols[f][r] = static_cast<std::uint32_t>(rng.below(vocabs[f]));
    const double p = cols[0][r] % 2 ? 0.7 : 0.3;
    labels[r] = rng.bernoulli(p) ? 1 : 0;
  }
  return Dataset(std::move(schema), std::move(cols), std::move(labels), assign_splits(rows, SplitRatio{}, seed));
}

SyntheticData planted(std::uint64_t seed, std::size_t n_samples) {
  SyntheticSpec spec;
  spec.n_fields = 12;
  spec.n_informative = 4;
  spec.n_samples = n_samples;
  spec.seed = seed;
  return generate_synthetic(spec);
}

ImportanceRanking oracle_ranking(const SyntheticData& data) {
  const Schema& schema = data.dataset.schema();
  std::vector<double> scores(schema.size(), 0.0);
  const double n = static_cast<double>(data.truth_order.size());
  for (std::size_t i = 0; i < data.truth_order.size(); ++i) {
    scores[field_index(schema, data.truth_order[i])] = n - static_cast<double>(i);
  }
  return ImportanceRanking::from_scores(schema, scores, "oracle", 0);
}

ImportanceRanking random_ranking(const Schema& schema, std::uint64_t seed) {
  Rng rng = Rng::derive(seed, "test/random-ranking");
  std::vector<double> scores(schema.size());
  for (auto& s : scores) s = rng.uniform();
  return ImportanceRanking::from_scores(schema, scores, "random", seed);
}

double batch_loss(Model& model, const Batch& batch, TrainingPlugin* plugin, bool backward) {
  Tape tape(backward);
  Var logits = model.forward(tape, batch, plugin);
  Var probs = op::sigmoid(tape, logits);
  Var loss = op::bce_loss(tape, probs, batch.labels);
  if (plugin) {
    if (auto extra = plugin->extra_loss(tape)) loss = op::add(tape, loss, *extra);
  }
  const double value = tape.value(loss).item();
  if (backward) tape.backward(loss);
  return value;
}

void randomize_zero_parameters(Model& model, std::uint64_t seed) {
  Rng rng = Rng::derive(seed, "test/zero-params");
  for (Parameter* p : model.params().all()) {
    const auto v = p->value.data();
    if (std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; })) {
      for (auto& x : p->value.storage()) x = rng.uniform(-0.3, 0.3);
    }
  }
}

GradCheck grad_check(Model& model, const Batch& batch, TrainingPlugin* plugin, std::vector<Parameter*> params,
                     std::size_t n_samples, std::uint64_t seed, double h, double rtol) {
  for (Parameter* p : params) p->grad = Tensor::zeros_like(p->value);
  model.params().zero_grad();
  batch_loss(model, batch, plugin, true);

  struct Entry {
    Parameter* p;
    std::size_t i;
    double analytic;
  };
  std::vector<Entry> candidates;
  for (Parameter* p : params) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      if (p->grad[i] != 0.0) candidates.push_back({p, i, p->grad[i]});
    }
  }
  Rng rng = Rng::derive(seed, "test/grad-check");
  rng.shuffle(candidates);
  // Cover every parameter tensor first, then fill up with random entries.
  std::vector<Entry> picked;
  std::vector<const Parameter*> seen;
  for (const auto& e : candidates) {
    if (std::find(seen.begin(), seen.end(), e.p) == seen.end()) {
      seen.push_back(e.p);
      picked.push_back(e);
    }
  }
  for (const auto& e : candidates) {
    if (picked.size() >= std::max(n_samples, seen.size())) break;
    const bool dup = std::any_of(picked.begin(), picked.end(), [&](const Entry& x) { return x.p == e.p && x.i == e.i; });
    if (!dup) picked.push_back(e);
  }

  GradCheck out;
  for (const auto& e : picked) {
    const double orig = e.p->value[e.i];
    e.p->value[e.i] = orig + h;
    const double up = batch_loss(model, batch, plugin, false);
    e.p->value[e.i] = orig - h;
    const double down = batch_loss(model, batch, plugin, false);
    e.p->value[e.i] = orig;
    const double numeric = (up - down) / (2.0 * h);
    const double rel = std::abs(numeric - e.analytic) / std::max({std::abs(numeric), std::abs(e.analytic), 1e-12});
    ++out.checked;
    // Below ~1e-9 the central difference itself is dominated by rounding.
    const bool ok = rel <= rtol || std::abs(numeric - e.analytic) < 1e-9;
    if (!ok) ++out.failed;
    if (rel > out.worst_rel) {
      out.worst_rel = rel;
      out.worst = fmt::format("{}[{}] analytic={:.10g} numeric={:.10g}", e.p->name, e.i, e.analytic, numeric);
    }
  }
  return out;
}

TempDir::TempDir(const std::string& tag) {
  std::random_device rd;
  Rng rng((static_cast<std::uint64_t>(rd()) << 32) ^ rd() ^ fnv1a64(tag));
  for (int attempt = 0; attempt < 100; ++attempt) {
    path_ = std::filesystem::temp_directory_path() / fmt::format("fsbench-{}-{:08x}", tag, rng.next_u64() & 0xffffffff);
    if (std::filesystem::create_directories(path_)) return;
  }
  throw std::runtime_error("cannot create a temp directory");
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

}  // namespace fsbench::testing
