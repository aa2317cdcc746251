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

#include "fsbench/gates.hpp"

#include <cmath>

#include <fmt/format.h>

#include "fsbench/checkpoint.hpp"
#include "fsbench/error.hpp"
#include "fsbench/io.hpp"

namespace fsbench {

namespace {

std::vector<std::size_t> all_fields(const Dataset& data) {
  std::vector<std::size_t> out(data.num_fields());
  for (std::size_t f = 0; f < out.size(); ++f) out[f] = f;
  return out;
}

// Ranking over every schema field from one score per model slot.
ImportanceRanking rank_slots(const Model& model, const std::vector<double>& slot_scores, std::string method,
                             std::uint64_t seed) {
  std::vector<double> scores(model.schema().size(), 0.0);
  for (std::size_t s = 0; s < slot_scores.size(); ++s) scores[model.selected_fields()[s]] = slot_scores[s];
  return ImportanceRanking::from_scores(model.schema(), scores, std::move(method), seed);
}

double sigmoid(double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

}  // namespace

// ---- AutoField ------------------------------------------------------------

AutoFieldGates::AutoFieldGates(const Model& model, const Dataset& data, const AutoFieldParams& params,
                               std::uint64_t seed)
    : data_(data), params_(params), rng_(Rng::derive(seed, "autofield/val-order")) {
  if (data.rows_of(Split::kVal).empty()) throw ProtocolError("AutoField needs a validation split for its gate updates");
  if (params.gate_learning_rate < 0.0) throw ConfigError("autofield: gate learning rate must be >= 0");
  if (params.val_batch_size < 1) throw ConfigError("autofield: val_batch_size must be >= 1");
  for (std::size_t s = 0; s < model.num_slots(); ++s) {
    logits_.add("autofield/" + model.slot_schema(s).name, Tensor(1, 2));
  }
  logits_.set_trainable(false);
  AdamConfig cfg;
  cfg.learning_rate = params.gate_learning_rate;
  optimizer_.emplace(logits_.all(), cfg);
}

std::optional<Var> AutoFieldGates::gate(Tape& tape, std::size_t slot, std::span<const std::uint32_t>, Var) {
  Var probs = op::softmax(tape, tape.param(logits_[slot]));
  return op::slice_cols(tape, probs, 0, 1);
}

const Batch& AutoFieldGates::next_val_batch(const Model& model) {
  if (cursor_ >= val_batches_.size()) {
    val_batches_ = epoch_batches(data_.rows_of(Split::kVal), params_.val_batch_size, rng_);
    cursor_ = 0;
  }
  current_ = make_batch(data_, model.selected_fields(), val_batches_[cursor_++]);
  return current_;
}

void AutoFieldGates::val_step(Model& model, const Batch& batch) {
  model.params().set_trainable(false);
  logits_.set_trainable(true);
  logits_.zero_grad();
  try {
    accumulate_batch(model, batch, this);
  } catch (...) {
    logits_.set_trainable(false);
    model.params().set_trainable(true);
    throw;
  }
  optimizer_->step();
  logits_.set_trainable(false);
  model.params().set_trainable(true);
  model.params().zero_grad();
}

void AutoFieldGates::after_step(Model& model, std::size_t) {
  if (params_.gate_learning_rate == 0.0) return;
  val_step(model, next_val_batch(model));
}

double AutoFieldGates::keep_probability(std::size_t slot) const {
  const Tensor& l = logits_[slot].value;
  const double m = std::max(l[0], l[1]);
  const double a = std::exp(l[0] - m);
  const double b = std::exp(l[1] - m);
  return a / (a + b);
}

ImportanceRanking autofield_search(const Dataset& data, const BackboneConfig& backbone, const TrainConfig& train_cfg,
                                   const AutoFieldParams& params) {
  require_splits(data);
  Model model = Model::build(backbone, data.schema(), all_fields(data), train_cfg.seed);
  AutoFieldGates gates(model, data, params, train_cfg.seed);
  train(model, data, train_cfg, &gates);
  std::vector<double> scores;
  for (std::size_t s = 0; s < model.num_slots(); ++s) scores.push_back(gates.keep_probability(s));
  return rank_slots(model, scores, "autofield", train_cfg.seed);
}

// ---- AdaFS ----------------------------------------------------------------

AdaFSController::AdaFSController(const Model& model, const AdaFSParams& params, std::uint64_t seed) {
  if (params.hidden < 1) throw ConfigError("adafs: hidden width must be >= 1");
  const std::size_t F = model.num_slots();
  const std::size_t in = F * model.config().embedding_dim;
  auto r1 = Rng::derive(seed, "adafs/w1");
  auto r2 = Rng::derive(seed, "adafs/w2");
  params_.add("adafs/w1", xavier_uniform(in, params.hidden, r1));
  params_.add("adafs/b1", Tensor(1, params.hidden));
  params_.add("adafs/w2", xavier_uniform(params.hidden, F, r2));
  params_.add("adafs/b2", Tensor(1, F));
}

void AdaFSController::begin_forward(Tape& tape, Model& model, const Batch& batch) {
  std::vector<Var> parts;
  for (std::size_t s = 0; s < model.num_slots(); ++s) {
    Var e = op::embed_lookup(tape, tape.param(model.embedding(s)), batch.values[s]);
    parts.push_back(op::detach(tape, e));
  }
  Var x = op::concat(tape, parts);
  Var h = op::relu(tape, op::add(tape, op::matmul(tape, x, tape.param(params_[0])), tape.param(params_[1])));
  Var z = op::add(tape, op::matmul(tape, h, tape.param(params_[2])), tape.param(params_[3]));
  weights_ = op::softmax(tape, z);
}

std::optional<Var> AdaFSController::gate(Tape& tape, std::size_t slot, std::span<const std::uint32_t>, Var) {
  return op::slice_cols(tape, weights_, slot, slot + 1);
}

SingleStageResult adafs_train(const Dataset& data, const BackboneConfig& backbone, const TrainConfig& train_cfg,
                              const AdaFSParams& params) {
  require_splits(data);
  Model model = Model::build(backbone, data.schema(), all_fields(data), train_cfg.seed);
  AdaFSController controller(model, params, train_cfg.seed);
  SingleStageResult out;
  out.train = train(model, data, train_cfg, &controller);
  out.kept_fields = all_fields(data);
  return out;
}

// ---- OptFS ----------------------------------------------------------------

namespace {
constexpr std::uint32_t kMaskMagic = 0x4d425346;  // "FSBM"
constexpr std::uint32_t kMaskVersion = 1;
}  // namespace

std::size_t ValueMask::kept_rows() const {
  std::size_t n = 0;
  for (const auto& k : keep) n += static_cast<std::size_t>(std::count(k.begin(), k.end(), true));
  return n;
}

std::size_t ValueMask::total_rows() const {
  std::size_t n = 0;
  for (const auto& k : keep) n += k.size();
  return n;
}

double ValueMask::keep_rate(std::size_t field) const {
  const auto& k = keep.at(field);
  if (k.empty()) return 0.0;
  return static_cast<double>(std::count(k.begin(), k.end(), true)) / static_cast<double>(k.size());
}

std::string ValueMask::encode() const {
  if (fields.size() != keep.size()) throw DimensionError("value mask: field/bit list length mismatch");
  ByteWriter w;
  w.u32(kMaskMagic);
  w.u32(kMaskVersion);
  w.u64(fields.size());
  for (std::size_t f = 0; f < fields.size(); ++f) {
    w.str(fields[f]);
    w.u64(keep[f].size());
    std::string packed((keep[f].size() + 7) / 8, '\0');
    for (std::size_t v = 0; v < keep[f].size(); ++v) {
      if (keep[f][v]) packed[v / 8] = static_cast<char>(packed[v / 8] | (1 << (v % 8)));
    }
    w.bytes(packed);
  }
  return w.buffer();
}

ValueMask ValueMask::decode(std::string_view bytes) {
  ByteReader r(bytes);
  if (r.u32() != kMaskMagic) throw ConfigError("value mask: bad magic");
  if (const auto v = r.u32(); v != kMaskVersion) throw ConfigError(fmt::format("value mask: unsupported version {}", v));
  ValueMask m;
  const std::uint64_t n = r.u64();
  for (std::uint64_t f = 0; f < n; ++f) {
    m.fields.push_back(r.str());
    const std::uint64_t vocab = r.u64();
    const std::string packed = r.bytes((vocab + 7) / 8);
    std::vector<bool> bits(vocab);
    for (std::size_t v = 0; v < vocab; ++v) bits[v] = (static_cast<unsigned char>(packed[v / 8]) >> (v % 8)) & 1;
    m.keep.push_back(std::move(bits));
  }
  if (!r.done()) throw ConfigError("value mask: trailing bytes");
  return m;
}

void ValueMask::save(const std::filesystem::path& path) const { write_file_atomic(path, encode()); }

ValueMask ValueMask::load(const std::filesystem::path& path) { return decode(read_file(path)); }

OptFSGates::OptFSGates(const Model& model, const OptFSParams& params, std::size_t epochs)
    : params_(params), epochs_(epochs), tau_(params.tau0) {
  if (!(params.tau0 > 0.0)) throw ConfigError("optfs: tau0 must be > 0");
  if (!(params.gamma > 0.0) || params.gamma >= 1.0) {
    throw ConfigError(fmt::format("optfs schedule error: gamma {} must lie in (0, 1) so the temperature anneals down",
                                  params.gamma));
  }
  if (params.lambda_max < 0.0) throw ConfigError("optfs: lambda_max must be >= 0");
  if (!(params.gate_learning_rate > 0.0)) throw ConfigError("optfs: gate learning rate must be > 0");
  if (epochs < 1) throw ConfigError("optfs: epochs must be >= 1");
  for (std::size_t s = 0; s < model.num_slots(); ++s) {
    const auto& fs = model.slot_schema(s);
    thetas_.add("optfs/" + fs.name, Tensor(fs.vocab_size, 1, 3.0 * params.tau0));
  }
}

AdamConfig OptFSGates::extra_optimizer(const AdamConfig& base) const {
  AdamConfig cfg = base;
  cfg.learning_rate = params_.gate_learning_rate;
  return cfg;
}

void OptFSGates::on_epoch_begin(std::size_t epoch) {
  tau_ = params_.tau0 * std::pow(params_.gamma, static_cast<double>(epoch));
  lambda_ = params_.lambda_max * static_cast<double>(epoch + 1) / static_cast<double>(epochs_);
}

std::optional<Var> OptFSGates::gate(Tape& tape, std::size_t slot, std::span<const std::uint32_t> values, Var) {
  Var theta = op::embed_lookup(tape, tape.param(thetas_[slot]), values);
  return op::sigmoid(tape, op::scale(tape, theta, 1.0 / tau_));
}

std::optional<Var> OptFSGates::extra_loss(Tape& tape) {
  if (lambda_ == 0.0) return std::nullopt;
  Var total = op::sum(tape, op::sigmoid(tape, op::scale(tape, tape.param(thetas_[0]), 1.0 / tau_)));
  for (std::size_t s = 1; s < thetas_.size(); ++s) {
    total = op::add(tape, total, op::sum(tape, op::sigmoid(tape, op::scale(tape, tape.param(thetas_[s]), 1.0 / tau_))));
  }
  return op::scale(tape, total, lambda_);
}

double OptFSGates::gate_value(std::size_t slot, std::uint32_t value) const {
  return sigmoid(thetas_[slot].value[value] / tau_);
}

ValueMask OptFSGates::keep_mask(const Model& model) const {
  ValueMask mask;
  for (const auto& fs : model.schema()) {
    mask.fields.push_back(fs.name);
    mask.keep.emplace_back(fs.vocab_size, true);
  }
  for (std::size_t s = 0; s < model.num_slots(); ++s) {
    auto& bits = mask.keep[model.selected_fields()[s]];
    for (std::size_t v = 0; v < bits.size(); ++v) bits[v] = gate_value(s, static_cast<std::uint32_t>(v)) >= 0.5;
  }
  return mask;
}

OptFSResult optfs_search(const Dataset& data, const BackboneConfig& backbone, const TrainConfig& train_cfg,
                         const OptFSParams& params) {
  require_splits(data);
  Model model = Model::build(backbone, data.schema(), all_fields(data), train_cfg.seed);
  OptFSGates gates(model, params, train_cfg.epochs);
  // The schedules define the search, so it runs to the last epoch.
  TrainConfig cfg = train_cfg;
  cfg.early_stop = false;
  cfg.restore_best = false;
  TrainResult result = train(model, data, cfg, &gates);
  ValueMask mask = gates.keep_mask(model);
  std::vector<double> scores;
  for (std::size_t f = 0; f < mask.keep.size(); ++f) scores.push_back(mask.keep_rate(f));
  auto ranking = ImportanceRanking::from_scores(data.schema(), scores, "optfs", train_cfg.seed);
  return {std::move(mask), std::move(ranking), std::move(result)};
}

// ---- LPFS -----------------------------------------------------------------

double lpfs_gate(double theta, double eps) {
  const double t2 = theta * theta;
  return t2 / (t2 + eps);
}

LpfsGates::LpfsGates(const Model& model, const LpfsParams& params) : params_(params), eps_(params.eps0) {
  if (!(params.eps0 > 0.0)) throw ConfigError("lpfs: eps0 must be > 0");
  if (!(params.delta > 0.0 && params.delta < 1.0)) throw ConfigError("lpfs: delta must lie in (0, 1)");
  if (!(params.gate_learning_rate > 0.0)) throw ConfigError("lpfs: gate learning rate must be > 0");
  for (std::size_t s = 0; s < model.num_slots(); ++s) {
    thetas_.add("lpfs/" + model.slot_schema(s).name, Tensor(1, 1, params.theta0));
  }
}

AdamConfig LpfsGates::extra_optimizer(const AdamConfig& base) const {
  AdamConfig cfg = base;
  cfg.learning_rate = params_.gate_learning_rate;
  return cfg;
}

void LpfsGates::on_epoch_begin(std::size_t epoch) {
  eps_ = params_.eps0 * std::pow(params_.delta, static_cast<double>(epoch));
}

std::optional<Var> LpfsGates::gate(Tape& tape, std::size_t slot, std::span<const std::uint32_t>, Var) {
  Var theta = tape.param(thetas_[slot]);
  Var t2 = op::mul(tape, theta, theta);
  return op::div(tape, t2, op::add_scalar(tape, t2, eps_));
}

double LpfsGates::gate_value(std::size_t slot) const { return lpfs_gate(thetas_[slot].value[0], eps_); }

SingleStageResult lpfs_run(const Dataset& data, const BackboneConfig& backbone, const TrainConfig& train_cfg,
                           const LpfsParams& params) {
  require_splits(data);
  Model model = Model::build(backbone, data.schema(), all_fields(data), train_cfg.seed);
  LpfsGates gates(model, params);
  TrainResult result = train(model, data, train_cfg, &gates);
  std::vector<double> scores;
  for (std::size_t s = 0; s < model.num_slots(); ++s) scores.push_back(gates.gate_value(s));
  SingleStageResult out{std::move(result), rank_slots(model, scores, "lpfs", train_cfg.seed), std::nullopt, {}};
  for (std::size_t s = 0; s < model.num_slots(); ++s) {
    if (scores[s] >= 0.5) {
      out.kept_fields.push_back(model.selected_fields()[s]);
    } else {
      gates.params()[s].value.fill(0.0);
    }
  }
  out.hard_test = evaluate(model, data, Split::kTest, &gates, train_cfg.eval_batch_size);
  return out;
}

// ---- fixed masks ----------------------------------------------------------

std::optional<Var> FieldMaskHook::gate(Tape& tape, std::size_t slot, std::span<const std::uint32_t>, Var) {
  const double s = scale_.at(slot);
  if (s == 1.0) return std::nullopt;
  return tape.constant(Tensor::scalar(s));
}

ValueMaskHook::ValueMaskHook(const Model& model, const ValueMask& mask) {
  for (std::size_t s = 0; s < model.num_slots(); ++s) {
    const auto& fs = model.slot_schema(s);
    const auto it = std::find(mask.fields.begin(), mask.fields.end(), fs.name);
    if (it == mask.fields.end()) throw SchemaError(fmt::format("value mask has no field '{}'", fs.name));
    const auto& bits = mask.keep[static_cast<std::size_t>(it - mask.fields.begin())];
    if (bits.size() != fs.vocab_size) {
      throw DimensionError(fmt::format("value mask for '{}' covers {} values, vocab is {}", fs.name, bits.size(),
                                       fs.vocab_size));
    }
    keep_.push_back(bits);
  }
}

std::optional<Var> ValueMaskHook::gate(Tape& tape, std::size_t slot, std::span<const std::uint32_t> values, Var) {
  const auto& bits = keep_.at(slot);
  Tensor m(values.size(), 1);
  for (std::size_t i = 0; i < values.size(); ++i) m[i] = bits[values[i]] ? 1.0 : 0.0;
  return tape.constant(std::move(m));
}

}  // namespace fsbench
