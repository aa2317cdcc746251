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

#include "fsbench/trainer.hpp"

#include <cmath>

#include <fmt/format.h>

#include "fsbench/error.hpp"
#include "fsbench/metrics.hpp"

namespace fsbench {

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (eval_batch_size < 1) throw ConfigError("train: eval_batch_size must be >= 1");
  if (!(adam.learning_rate > 0.0)) throw ConfigError("train: learning rate must be > 0");
}

void require_splits(const Dataset& data) {
  if (data.rows_of(Split::kTrain).empty()) throw ConfigError("train: empty train split");
  for (Split s : {Split::kVal, Split::kTest}) {
    if (data.rows_of(s).empty()) throw ProtocolError(fmt::format("dataset has no {} rows", to_string(s)));
  }
}

EvalResult evaluate(const Model& model, const Dataset& data, Split split, FieldHook* hook, std::size_t batch_size) {
  const auto preds = model.predict(data, split, hook, batch_size);
  const auto rows = data.rows_of(split);
  std::vector<std::uint8_t> labels(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) labels[i] = data.labels()[rows[i]];
  return {auc(preds, labels), logloss(preds, labels)};
}

std::vector<std::vector<std::size_t>> epoch_batches(std::span<const std::size_t> rows, std::size_t batch_size,
                                                     Rng& rng) {
  std::vector<std::size_t> order(rows.begin(), rows.end());
  rng.shuffle(order);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start), order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

double accumulate_batch(Model& model, const Batch& batch, FieldHook* hook, TrainingPlugin* plugin) {
  Tape tape;
  Var probs = op::sigmoid(tape, model.forward(tape, batch, hook));
  Var loss = op::bce_loss(tape, probs, batch.labels);
  const double data_loss = tape.value(loss).item();
  if (plugin) {
    if (auto extra = plugin->extra_loss(tape)) loss = op::add(tape, loss, *extra);
  }
  if (!std::isfinite(tape.value(loss).item())) {
    throw NumericError("training diverged (non-finite loss); try a lower learning rate");
  }
  tape.backward(loss);
  return data_loss;
}

double train_log_odds(const Dataset& data) {
  const auto rows = data.rows_of(Split::kTrain);
  double pos = 0.0;
  for (std::size_t r : rows) pos += data.labels()[r];
  const double n = static_cast<double>(rows.size());
  // Add-one smoothing keeps the value finite for single-class splits.
  return std::log((pos + 1.0) / (n - pos + 1.0));
}

namespace {

std::vector<Tensor> snapshot_extra(std::span<Parameter* const> params) {
  std::vector<Tensor> out;
  for (const Parameter* p : params) out.push_back(p->value);
  return out;
}

}  // namespace

TrainResult train(Model& model, const Dataset& data, const TrainConfig& config, TrainingPlugin* plugin) {
  config.validate();
  require_splits(data);

  if (config.bias_from_prior && !model.trained()) model.output_bias().value.fill(train_log_odds(data));

  std::vector<Parameter*> extra = plugin ? plugin->extra_parameters() : std::vector<Parameter*>{};
  Adam optimizer(model.params().all(), config.adam);
  std::optional<Adam> extra_optimizer;
  if (!extra.empty()) extra_optimizer.emplace(extra, plugin->extra_optimizer(config.adam));

  auto rng = Rng::derive(config.seed, "train/epoch-order");
  const auto train_rows = data.rows_of(Split::kTrain);
  TrainResult result;
  std::vector<Tensor> best_model = model.params().snapshot();
  std::vector<Tensor> best_extra = snapshot_extra(extra);
  bool have_best = false;
  std::size_t since_best = 0;
  std::size_t step = 0;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    if (plugin) plugin->on_epoch_begin(epoch);
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (const auto& rows : epoch_batches(train_rows, config.batch_size, rng)) {
      const Batch batch = make_batch(data, model.selected_fields(), rows);
      optimizer.zero_grad();
      if (extra_optimizer) extra_optimizer->zero_grad();
      loss_sum += accumulate_batch(model, batch, plugin, plugin) * static_cast<double>(rows.size());
      seen += rows.size();
      optimizer.step();
      if (extra_optimizer) extra_optimizer->step();
      if (plugin) plugin->after_step(model, step);
      ++step;
    }
    const EvalResult val = evaluate(model, data, Split::kVal, plugin, config.eval_batch_size);
    result.history.push_back({epoch, loss_sum / static_cast<double>(seen), val.auc, val.logloss});
    if (!have_best || val.auc > result.best_val_auc) {
      have_best = true;
      result.best_val_auc = val.auc;
      result.best_epoch = epoch;
      best_model = model.params().snapshot();
      best_extra = snapshot_extra(extra);
      since_best = 0;
    } else if (++since_best >= config.patience && config.early_stop) {
      break;
    }
  }

  if (config.restore_best) {
    model.params().restore(best_model);
    for (std::size_t i = 0; i < extra.size(); ++i) extra[i]->value = best_extra[i];
  } else {
    result.best_val_auc = result.history.back().val_auc;
    result.best_epoch = result.history.back().epoch;
  }
  model.mark_trained();
  result.test = evaluate(model, data, Split::kTest, plugin, config.eval_batch_size);
  return result;
}

}  // namespace fsbench
