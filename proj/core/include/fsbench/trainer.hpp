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

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fsbench/adam.hpp"
#include "fsbench/backbones.hpp"
#include "fsbench/dataio.hpp"
#include "fsbench/rng.hpp"

namespace fsbench {

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 4096;
  AdamConfig adam;
  std::size_t patience = 2;  // epochs without val-AUC improvement before stopping
  bool early_stop = true;
  bool restore_best = true;
  bool bias_from_prior = true;  // start the output bias at the train-split log-odds
  std::uint64_t seed = 0;
  std::size_t eval_batch_size = 8192;

  void validate() const;
};

/// A FieldHook that owns trainable state and takes part in the training loop.
class TrainingPlugin : public FieldHook {
 public:
  /// Parameters updated alongside the model by a second Adam instance.
  virtual std::vector<Parameter*> extra_parameters() { return {}; }
  virtual AdamConfig extra_optimizer(const AdamConfig& base) const { return base; }
  /// Penalty added to each batch loss.
  virtual std::optional<Var> extra_loss(Tape& /*tape*/) { return std::nullopt; }
  virtual void on_epoch_begin(std::size_t /*epoch*/) {}
  /// Runs after every optimizer step on a train batch.
  virtual void after_step(Model& /*model*/, std::size_t /*step*/) {}
};

struct EvalResult {
  double auc = 0.5;
  double logloss = 0.0;
};

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_auc = 0.5;
  double val_logloss = 0.0;
};

struct TrainResult {
  std::vector<EpochLog> history;
  std::size_t best_epoch = 0;
  double best_val_auc = 0.5;
  EvalResult test;
};

EvalResult evaluate(const Model& model, const Dataset& data, Split split, FieldHook* hook = nullptr,
                    std::size_t batch_size = 8192);

/// Row indices of a split in a seeded random order, cut into batches.
std::vector<std::vector<std::size_t>> epoch_batches(std::span<const std::size_t> rows, std::size_t batch_size,
                                                     Rng& rng);

/// Mean BCE of one batch; accumulates gradients without stepping.
double accumulate_batch(Model& model, const Batch& batch, FieldHook* hook, TrainingPlugin* plugin = nullptr);

/// Mini-batch Adam with early stopping on validation AUC. The best-epoch
/// weights (plugin parameters included) are restored before the test pass.
TrainResult train(Model& model, const Dataset& data, const TrainConfig& config, TrainingPlugin* plugin = nullptr);

/// Smoothed log-odds of the train-split click rate.
double train_log_odds(const Dataset& data);

/// Throws unless train, val, and test splits all hold rows.
void require_splits(const Dataset& data);

}  // namespace fsbench
