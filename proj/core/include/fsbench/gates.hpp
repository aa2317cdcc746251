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
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fsbench/backbones.hpp"
#include "fsbench/ranking.hpp"
#include "fsbench/rng.hpp"
#include "fsbench/trainer.hpp"

namespace fsbench {

// ---- AutoField ------------------------------------------------------------

struct AutoFieldParams {
  double gate_learning_rate = 0.01;
  std::size_t val_batch_size = 512;
};

/// Two logits per field; the keep probability softmax(logits)[0] scales the
/// field. Logits only move on validation batches, model weights only on train
/// batches.
class AutoFieldGates : public TrainingPlugin {
 public:
  AutoFieldGates(const Model& model, const Dataset& data, const AutoFieldParams& params, std::uint64_t seed);

  std::optional<Var> gate(Tape& tape, std::size_t slot, std::span<const std::uint32_t> values,
                          Var embedding) override;
  void after_step(Model& model, std::size_t step) override;

  /// One gate update on a validation batch with model weights frozen.
  void val_step(Model& model, const Batch& batch);
  double keep_probability(std::size_t slot) const;
  ParameterSet& params() noexcept { return logits_; }

 private:
  const Batch& next_val_batch(const Model& model);

  const Dataset& data_;
  AutoFieldParams params_;
  ParameterSet logits_;
  std::optional<Adam> optimizer_;
  Rng rng_;
  std::vector<std::vector<std::size_t>> val_batches_;
  std::size_t cursor_ = 0;
  Batch current_;
};

ImportanceRanking autofield_search(const Dataset& data, const BackboneConfig& backbone, const TrainConfig& train,
                                   const AutoFieldParams& params);

// ---- AdaFS ----------------------------------------------------------------

struct AdaFSParams {
  std::size_t hidden = 16;
};

/// Per-sample field weights from a small MLP over the detached, concatenated
/// field embeddings, normalized by softmax.
class AdaFSController : public TrainingPlugin {
 public:
  AdaFSController(const Model& model, const AdaFSParams& params, std::uint64_t seed);

  void begin_forward(Tape& tape, Model& model, const Batch& batch) override;
  std::optional<Var> gate(Tape& tape, std::size_t slot, std::span<const std::uint32_t> values,
                          Var embedding) override;
  std::vector<Parameter*> extra_parameters() override { return params_.all(); }

  /// Field weights (batch x fields) from the last forward pass.
  Var weights() const { return weights_; }
  ParameterSet& params() noexcept { return params_; }

 private:
  ParameterSet params_;
  Var weights_;
};

struct SingleStageResult {
  TrainResult train;
  std::optional<ImportanceRanking> ranking;
  /// Hard variant: test metrics with low-gate fields removed.
  std::optional<EvalResult> hard_test;
  std::vector<std::size_t> kept_fields;  // schema indices
};

SingleStageResult adafs_train(const Dataset& data, const BackboneConfig& backbone, const TrainConfig& train,
                              const AdaFSParams& params);

// ---- OptFS ----------------------------------------------------------------

/// Keep/drop bit per (field, value), over every schema field.
struct ValueMask {
  std::vector<std::string> fields;
  std::vector<std::vector<bool>> keep;

  std::size_t kept_rows() const;
  std::size_t total_rows() const;
  double keep_rate(std::size_t field) const;

  /// Binary form: magic, version, field count, then per field the name,
  /// vocab size, and LSB-first packed bits.
  std::string encode() const;
  static ValueMask decode(std::string_view bytes);
  void save(const std::filesystem::path& path) const;
  static ValueMask load(const std::filesystem::path& path);
};

struct OptFSParams {
  double tau0 = 1.0;
  double gamma = 0.7;        // per-epoch temperature decay, must be < 1
  double lambda_max = 1e-4;  // sparsity weight reached at the last epoch
  double gate_learning_rate = 0.05;
};

/// One scalar per embedding row; gate(v) = sigmoid(theta_v / tau).
class OptFSGates : public TrainingPlugin {
 public:
  OptFSGates(const Model& model, const OptFSParams& params, std::size_t epochs);

  std::optional<Var> gate(Tape& tape, std::size_t slot, std::span<const std::uint32_t> values,
                          Var embedding) override;
  std::vector<Parameter*> extra_parameters() override { return thetas_.all(); }
  AdamConfig extra_optimizer(const AdamConfig& base) const override;
  std::optional<Var> extra_loss(Tape& tape) override;
  void on_epoch_begin(std::size_t epoch) override;

  double tau() const noexcept { return tau_; }
  double lambda() const noexcept { return lambda_; }
  double gate_value(std::size_t slot, std::uint32_t value) const;
  /// Values with gate >= 0.5 are kept; fields outside the model keep everything.
  ValueMask keep_mask(const Model& model) const;
  ParameterSet& params() noexcept { return thetas_; }

 private:
  OptFSParams params_;
  std::size_t epochs_;
  double tau_;
  double lambda_ = 0.0;
  ParameterSet thetas_;
};

struct OptFSResult {
  ValueMask mask;
  ImportanceRanking ranking;  // score = kept values / vocab size
  TrainResult train;
};

OptFSResult optfs_search(const Dataset& data, const BackboneConfig& backbone, const TrainConfig& train,
                         const OptFSParams& params);

// ---- LPFS -----------------------------------------------------------------

struct LpfsParams {
  double eps0 = 0.1;
  double delta = 0.8;  // per-epoch decay of epsilon, in (0, 1)
  double theta0 = 1.0;
  double gate_learning_rate = 0.01;
};

/// g(theta, eps) = theta^2 / (theta^2 + eps).
double lpfs_gate(double theta, double eps);

class LpfsGates : public TrainingPlugin {
 public:
  LpfsGates(const Model& model, const LpfsParams& params);

  std::optional<Var> gate(Tape& tape, std::size_t slot, std::span<const std::uint32_t> values,
                          Var embedding) override;
  std::vector<Parameter*> extra_parameters() override { return thetas_.all(); }
  AdamConfig extra_optimizer(const AdamConfig& base) const override;
  void on_epoch_begin(std::size_t epoch) override;

  double epsilon() const noexcept { return eps_; }
  double gate_value(std::size_t slot) const;
  ParameterSet& params() noexcept { return thetas_; }

 private:
  LpfsParams params_;
  double eps_;
  ParameterSet thetas_;
};

/// Trained model evaluation plus a ranking by final gate value. Fields whose
/// final gate is below 0.5 are then removed (theta set to 0) for the hard
/// evaluation.
SingleStageResult lpfs_run(const Dataset& data, const BackboneConfig& backbone, const TrainConfig& train,
                           const LpfsParams& params);

// ---- fixed masks ----------------------------------------------------------

/// Constant 0/1 multiplier per model slot (soft field selection).
class FieldMaskHook : public TrainingPlugin {
 public:
  explicit FieldMaskHook(std::vector<double> slot_scale) : scale_(std::move(slot_scale)) {}
  std::optional<Var> gate(Tape& tape, std::size_t slot, std::span<const std::uint32_t> values,
                          Var embedding) override;

 private:
  std::vector<double> scale_;
};

/// Zeroes dropped values row by row (value-level selection).
class ValueMaskHook : public TrainingPlugin {
 public:
  ValueMaskHook(const Model& model, const ValueMask& mask);
  std::optional<Var> gate(Tape& tape, std::size_t slot, std::span<const std::uint32_t> values,
                          Var embedding) override;

 private:
  std::vector<std::vector<bool>> keep_;  // [slot][value]
};

}  // namespace fsbench
