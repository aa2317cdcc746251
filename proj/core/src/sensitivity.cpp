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

#include "fsbench/sensitivity.hpp"

#include <cmath>
#include <iostream>

#include <fmt/format.h>

#include "fsbench/error.hpp"
#include "fsbench/io.hpp"
#include "fsbench/metrics.hpp"

namespace fsbench {

std::string SensitivityReport::to_csv() const {
  const bool perm = base_auc.has_value();
  std::string out = perm ? "field,score,std,permuted_auc\n" : "field,score,std\n";
  for (std::size_t i = 0; i < fields.size(); ++i) {
    out += fmt::format("{},{},{}", fields[i], format_double(score[i]), format_double(stddev[i]));
    if (perm) out += "," + format_double(permuted_auc[i]);
    out += "\n";
  }
  return out;
}

namespace {

struct Moments {
  std::vector<double> sum, sum_sq;
  std::size_t n = 0;

  explicit Moments(std::size_t k) : sum(k, 0.0), sum_sq(k, 0.0) {}
  void add(std::span<const double> x) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      sum[i] += x[i];
      sum_sq[i] += x[i] * x[i];
    }
    ++n;
  }
  double mean(std::size_t i) const { return sum[i] / static_cast<double>(n); }
  double stddev(std::size_t i) const {
    const double m = mean(i);
    return std::sqrt(std::max(0.0, sum_sq[i] / static_cast<double>(n) - m * m));
  }
};

void require_trained(const Model& model, std::string_view method) {
  if (!model.trained()) throw ProtocolError(fmt::format("{} needs a trained model (no checkpoint loaded)", method));
}

// Slot scores spread over the schema; fields outside the model score 0.
SensitivityResult finish(const Model& model, const Moments& m, std::string method, std::uint64_t seed,
                         std::size_t batches) {
  const Schema& schema = model.schema();
  SensitivityReport report;
  report.method = method;
  report.batches = batches;
  report.score.assign(schema.size(), 0.0);
  report.stddev.assign(schema.size(), 0.0);
  for (const auto& fs : schema) report.fields.push_back(fs.name);
  for (std::size_t s = 0; s < model.num_slots(); ++s) {
    const std::size_t f = model.selected_fields()[s];
    report.score[f] = m.mean(s);
    report.stddev[f] = m.stddev(s);
  }
  auto ranking = ImportanceRanking::from_scores(schema, report.score, std::move(method), seed);
  return {std::move(ranking), std::move(report)};
}

class SharkProbe : public FieldHook {
 public:
  std::optional<Var> gate(Tape& tape, std::size_t, std::span<const std::uint32_t>, Var embedding) override {
    tape.watch(embedding);
    embeddings.push_back(embedding);
    values.push_back(tape.value(embedding));
    return std::nullopt;
  }
  std::vector<Var> embeddings;
  std::vector<Tensor> values;  // the tape is cleared by backward()
};

class ConstantGateProbe : public FieldHook {
 public:
  explicit ConstantGateProbe(std::span<const double> values) : values_(values) {}
  std::optional<Var> gate(Tape& tape, std::size_t slot, std::span<const std::uint32_t>, Var) override {
    Var g = tape.input(Tensor::scalar(values_[slot]));
    gates.push_back(g);
    return g;
  }
  std::vector<Var> gates;

 private:
  std::span<const double> values_;
};

}  // namespace

SensitivityResult permutation_rank(const Model& model, const Dataset& data, const PermutationParams& params,
                                   std::uint64_t seed) {
  require_trained(model, "permutation");
  if (params.n_repeats < 1) throw ConfigError("permutation: n_repeats must be >= 1");
  const auto val = data.rows_of(Split::kVal);
  if (val.empty()) throw ProtocolError("permutation needs a validation split");

  const double base = evaluate(model, data, Split::kVal).auc;
  SensitivityReport report;
  report.method = "permutation";
  report.base_auc = base;
  report.batches = params.n_repeats;
  for (std::size_t f = 0; f < data.num_fields(); ++f) {
    report.fields.push_back(data.schema()[f].name);
    const auto col = data.column(f);
    double sum = 0.0, sum_sq = 0.0, auc_sum = 0.0;
    for (std::size_t rep = 0; rep < params.n_repeats; ++rep) {
      auto rng = Rng::derive(seed, "permutation/" + data.schema()[f].name, rep);
      std::vector<std::uint32_t> vals;
      for (std::size_t r : val) vals.push_back(col[r]);
      rng.shuffle(vals);
      std::vector<std::uint32_t> shuffled(col.begin(), col.end());
      for (std::size_t i = 0; i < val.size(); ++i) shuffled[val[i]] = vals[i];
      const double a = evaluate(model, data.with_column(f, std::move(shuffled)), Split::kVal).auc;
      const double drop = base - a;
      sum += drop;
      sum_sq += drop * drop;
      auc_sum += a;
    }
    const double n = static_cast<double>(params.n_repeats);
    report.score.push_back(sum / n);
    report.stddev.push_back(std::sqrt(std::max(0.0, sum_sq / n - (sum / n) * (sum / n))));
    report.permuted_auc.push_back(auc_sum / n);
  }
  auto ranking = ImportanceRanking::from_scores(data.schema(), report.score, "permutation", seed);
  return {std::move(ranking), std::move(report)};
}

std::vector<double> shark_batch_scores(Model& model, const Batch& batch) {
  Tape tape;
  SharkProbe probe;
  Var probs = op::sigmoid(tape, model.forward(tape, batch, &probe));
  Var loss = op::bce_loss(tape, probs, batch.labels, Reduction::kSum);
  const Gradients grads = tape.backward(loss);
  model.params().zero_grad();
  std::vector<double> out;
  for (std::size_t s = 0; s < probe.embeddings.size(); ++s) {
    const Tensor& g = grads[probe.embeddings[s]];
    const Tensor& e = probe.values[s];
    double total = 0.0;
    for (std::size_t r = 0; r < e.rows(); ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < e.cols(); ++c) dot += g.at(r, c) * e.at(r, c);
      total += std::abs(dot);
    }
    out.push_back(total);
  }
  return out;
}

SensitivityResult shark_rank(Model& model, const Dataset& data, const SharkParams& params, std::uint64_t seed) {
  require_trained(model, "shark");
  if (params.n_batches < 1 || params.batch_size < 1) throw ConfigError("shark: n_batches and batch_size must be >= 1");
  const auto val = data.rows_of(Split::kVal);
  if (val.empty()) throw ProtocolError("shark needs a validation split");
  auto rng = Rng::derive(seed, "shark/val-order");
  const auto batches = epoch_batches(val, params.batch_size, rng);
  const std::size_t n = std::min(params.n_batches, batches.size());
  Moments m(model.num_slots());
  for (std::size_t b = 0; b < n; ++b) {
    const Batch batch = make_batch(data, model.selected_fields(), batches[b]);
    auto scores = shark_batch_scores(model, batch);
    for (double& x : scores) x /= static_cast<double>(batch.size());
    m.add(scores);
  }
  return finish(model, m, "shark", seed, n);
}

std::vector<double> sfs_gate_gradients(Model& model, const Batch& batch, std::span<const double> gate_values) {
  if (gate_values.size() != model.num_slots()) {
    throw DimensionError(fmt::format("sfs: {} gate values for {} fields", gate_values.size(), model.num_slots()));
  }
  Tape tape;
  ConstantGateProbe probe(gate_values);
  Var probs = op::sigmoid(tape, model.forward(tape, batch, &probe));
  Var loss = op::bce_loss(tape, probs, batch.labels);
  const Gradients grads = tape.backward(loss);
  std::vector<double> out;
  for (Var g : probe.gates) out.push_back(grads[g].item());
  return out;
}

SensitivityResult sfs_rank(const Dataset& data, const BackboneConfig& backbone, const TrainConfig& train_cfg,
                           const SfsParams& params) {
  train_cfg.validate();
  if (params.n_batches < 1) throw ConfigError("sfs: n_batches must be >= 1");
  const auto train_rows = data.rows_of(Split::kTrain);
  if (train_rows.empty()) throw ConfigError("sfs: empty train split");

  std::vector<std::size_t> fields(data.num_fields());
  for (std::size_t f = 0; f < fields.size(); ++f) fields[f] = f;
  Model model = Model::build(backbone, data.schema(), fields, train_cfg.seed);
  Adam optimizer(model.params().all(), train_cfg.adam);
  auto rng = Rng::derive(train_cfg.seed, "train/epoch-order");
  const auto batches = epoch_batches(train_rows, train_cfg.batch_size, rng);
  std::size_t n = params.n_batches;
  if (n > batches.size()) {
    std::cerr << fmt::format("warning: sfs n_batches {} exceeds one epoch; clipped to {}\n", n, batches.size());
    n = batches.size();
  }
  const std::vector<double> ones(model.num_slots(), 1.0);
  Moments m(model.num_slots());
  for (std::size_t b = 0; b < n; ++b) {
    const Batch batch = make_batch(data, model.selected_fields(), batches[b]);
    optimizer.zero_grad();
    auto g = sfs_gate_gradients(model, batch, ones);
    for (double& x : g) x = std::abs(x);
    m.add(g);
    optimizer.step();
  }
  return finish(model, m, "sfs", train_cfg.seed, n);
}

}  // namespace fsbench
