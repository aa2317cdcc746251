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
#include <string>
#include <string_view>
#include <vector>

#include "fsbench/dataio.hpp"
#include "fsbench/tape.hpp"
#include "fsbench/tensor.hpp"

namespace fsbench {

enum class BackboneKind { kWideDeep, kDeepFM, kDCN, kFibiNet };

std::string_view to_string(BackboneKind kind);
BackboneKind parse_backbone(std::string_view name);

struct BackboneConfig {
  BackboneKind kind = BackboneKind::kDeepFM;
  std::size_t embedding_dim = 8;
  std::vector<std::size_t> mlp_dims{64, 32};
  std::size_t cross_layers = 3;     // DCN only
  std::size_t senet_reduction = 3;  // FibiNet only

  void validate() const;
};

/// Rows of a mini-batch, column-major over the model's selected fields.
struct Batch {
  std::vector<std::vector<std::uint32_t>> values;  // [slot][row]
  std::vector<double> labels;
  std::size_t size() const noexcept { return labels.size(); }
};

Batch make_batch(const Dataset& data, std::span<const std::size_t> fields,
                 std::span<const std::size_t> rows);

class Model;

/// Selector extension point. A hook may return a multiplier for a field,
/// shaped (batch x 1) or (1 x 1); the model scales both the field's embedding
/// and its first-order weight by it. Returning nullopt leaves the field as is.
class FieldHook {
 public:
  virtual ~FieldHook() = default;
  /// Called once per forward pass before any gate() call.
  virtual void begin_forward(Tape& /*tape*/, Model& /*model*/, const Batch& /*batch*/) {}
  virtual std::optional<Var> gate(Tape& tape, std::size_t slot, std::span<const std::uint32_t> values,
                                  Var embedding) = 0;
};

/// A CTR model over a subset of schema fields. Only selected fields own
/// embedding rows; every architecture emits one logit per sample.
class Model {
 public:
  /// `selected` holds schema indices; they are used in schema order.
  static Model build(const BackboneConfig& config, const Schema& schema, std::vector<std::size_t> selected,
                     std::uint64_t seed);

  Model(Model&&) noexcept = default;
  Model& operator=(Model&&) noexcept = default;

  /// Logits, shape (batch x 1).
  Var forward(Tape& tape, const Batch& batch, FieldHook* hook = nullptr);

  /// Click probabilities for every row of a split, in rows_of(split) order.
  /// Never writes parameters.
  std::vector<double> predict(const Dataset& data, Split split, FieldHook* hook = nullptr,
                              std::size_t batch_size = 8192) const;

  const BackboneConfig& config() const noexcept { return config_; }
  const Schema& schema() const noexcept { return schema_; }
  std::span<const std::size_t> selected_fields() const noexcept { return selected_; }
  std::size_t num_slots() const noexcept { return selected_.size(); }
  const FieldSchema& slot_schema(std::size_t slot) const { return schema_.at(selected_.at(slot)); }

  /// Embedding-table rows owned by the model: sum of selected vocab sizes.
  std::size_t embedding_rows() const;
  std::size_t parameter_count() const { return params_.scalar_count(); }

  ParameterSet& params() noexcept { return params_; }
  const ParameterSet& params() const noexcept { return params_; }
  Parameter& embedding(std::size_t slot) { return *embeddings_.at(slot); }
  Parameter& linear(std::size_t slot) { return *linear_.at(slot); }
  /// Output-layer bias, present for every architecture.
  Parameter& output_bias() { return *out_b_; }

  bool trained() const noexcept { return trained_; }
  void mark_trained() noexcept { trained_ = true; }

  /// Parameter file followed by an architecture block (kind, dims, selected fields).
  std::string encode_checkpoint() const;
  static Model decode_checkpoint(std::string_view bytes, const Schema& schema);

 private:
  Model() = default;
  Var mlp(Tape& t, Var x, std::size_t first_layer);

  BackboneConfig config_;
  Schema schema_;
  std::vector<std::size_t> selected_;
  ParameterSet params_;
  std::vector<Parameter*> embeddings_;
  std::vector<Parameter*> linear_;
  std::vector<Parameter*> mlp_w_;
  std::vector<Parameter*> mlp_b_;
  std::vector<Parameter*> cross_w_;
  std::vector<Parameter*> cross_b_;
  Parameter* senet_w1_ = nullptr;
  Parameter* senet_b1_ = nullptr;
  Parameter* senet_w2_ = nullptr;
  Parameter* senet_b2_ = nullptr;
  Parameter* bilinear_e_ = nullptr;
  Parameter* bilinear_v_ = nullptr;
  Parameter* out_w_ = nullptr;
  Parameter* out_b_ = nullptr;
  bool trained_ = false;
};

/// Building blocks exposed for testing.
namespace blocks {

/// Sum over field pairs i < j of <e_i, e_j>, per row; returns (batch x 1).
Var fm_pairwise(Tape& t, std::span<const Var> embeddings);

/// One cross layer: x0 * (xl . w) + b + xl, with w (D x 1) and b (1 x D).
Var cross_layer(Tape& t, Var x0, Var xl, Var w, Var b);

/// Field-shared bilinear interactions (e_i W) o e_j for all i < j.
std::vector<Var> bilinear_pairs(Tape& t, std::span<const Var> embeddings, Var w);

}  // namespace blocks
}  // namespace fsbench
