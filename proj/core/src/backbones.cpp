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

#include "fsbench/backbones.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "fsbench/checkpoint.hpp"
#include "fsbench/error.hpp"
#include "fsbench/rng.hpp"

namespace fsbench {

namespace {

constexpr double kEmbeddingInitLimit = 0.05;
constexpr std::uint32_t kArchMagic = 0x41425346;  // "FSBA"

bool has_linear_term(BackboneKind kind) { return kind != BackboneKind::kDCN; }

Var dense(Tape& t, Var x, Parameter& w, Parameter& b) {
  return op::add(t, op::matmul(t, x, t.param(w)), t.param(b));
}

}  // namespace

std::string_view to_string(BackboneKind kind) {
  switch (kind) {
    case BackboneKind::kWideDeep:
      return "wide_deep";
    case BackboneKind::kDeepFM:
      return "deepfm";
    case BackboneKind::kDCN:
      return "dcn";
    case BackboneKind::kFibiNet:
      return "fibinet";
  }
  return "?";
}

BackboneKind parse_backbone(std::string_view name) {
  for (auto k : {BackboneKind::kWideDeep, BackboneKind::kDeepFM, BackboneKind::kDCN, BackboneKind::kFibiNet}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError(fmt::format("unknown backbone '{}' (wide_deep, deepfm, dcn, fibinet)", name));
}

void BackboneConfig::validate() const {
  if (embedding_dim < 1) throw ConfigError("backbone: embedding_dim must be >= 1");
  if (mlp_dims.empty()) throw ConfigError("backbone: mlp_dims must be non-empty");
  for (std::size_t d : mlp_dims) {
    if (d < 1) throw ConfigError("backbone: mlp_dims entries must be >= 1");
  }
  if (kind == BackboneKind::kDCN && cross_layers < 1) throw ConfigError("backbone: DCN needs cross_layers >= 1");
  if (kind == BackboneKind::kFibiNet && senet_reduction < 1) {
    throw ConfigError("backbone: FibiNet needs senet_reduction >= 1");
  }
}

Batch make_batch(const Dataset& data, std::span<const std::size_t> fields, std::span<const std::size_t> rows) {
  Batch b;
  b.values.resize(fields.size());
  for (std::size_t s = 0; s < fields.size(); ++s) {
    const auto col = data.column(fields[s]);
    auto& out = b.values[s];
    out.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) out[i] = col[rows[i]];
  }
  const auto labels = data.labels();
  b.labels.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) b.labels[i] = labels[rows[i]];
  return b;
}

Model Model::build(const BackboneConfig& config, const Schema& schema, std::vector<std::size_t> selected,
                   std::uint64_t seed) {
  config.validate();
  if (selected.empty()) throw ConfigError("model: empty field selection");
  std::sort(selected.begin(), selected.end());
  if (std::adjacent_find(selected.begin(), selected.end()) != selected.end()) {
    throw ConfigError("model: duplicate field in selection");
  }
  if (selected.back() >= schema.size()) throw SchemaError("model: selected field outside schema");

  Model m;
  m.config_ = config;
  m.schema_ = schema;
  m.selected_ = std::move(selected);

  const std::size_t d = config.embedding_dim;
  const std::size_t F = m.selected_.size();
  // Every parameter draws from its own stream keyed by name, so a model over
  // k fields initializes identically whatever the rest of the schema holds.
  auto stream = [seed](const std::string& name) { return Rng::derive(seed, name); };
  auto add_uniform = [&](const std::string& name, std::size_t rows, std::size_t cols, double limit) {
    auto rng = stream(name);
    return &m.params_.add(name, uniform_init(rows, cols, limit, rng));
  };
  auto add_xavier = [&](const std::string& name, std::size_t in, std::size_t out) {
    auto rng = stream(name);
    return &m.params_.add(name, xavier_uniform(in, out, rng));
  };
  auto add_zeros = [&](const std::string& name, std::size_t rows, std::size_t cols) {
    return &m.params_.add(name, Tensor(rows, cols));
  };

  for (std::size_t f : m.selected_) {
    const auto& fs = schema[f];
    m.embeddings_.push_back(add_uniform("emb/" + fs.name, fs.vocab_size, d, kEmbeddingInitLimit));
  }
  if (has_linear_term(config.kind)) {
    for (std::size_t f : m.selected_) m.linear_.push_back(add_zeros("lin/" + schema[f].name, schema[f].vocab_size, 1));
  }

  std::size_t mlp_in = F * d;
  if (config.kind == BackboneKind::kDCN) {
    for (std::size_t l = 0; l < config.cross_layers; ++l) {
      m.cross_w_.push_back(add_xavier(fmt::format("cross/{}/w", l), F * d, 1));
      m.cross_b_.push_back(add_zeros(fmt::format("cross/{}/b", l), 1, F * d));
    }
  } else if (config.kind == BackboneKind::kFibiNet) {
    const std::size_t reduced = std::max<std::size_t>(1, F / config.senet_reduction);
    m.senet_w1_ = add_xavier("senet/w1", F, reduced);
    m.senet_b1_ = add_zeros("senet/b1", 1, reduced);
    m.senet_w2_ = add_xavier("senet/w2", reduced, F);
    m.senet_b2_ = add_zeros("senet/b2", 1, F);
    m.bilinear_e_ = add_xavier("bilinear/e", d, d);
    m.bilinear_v_ = add_xavier("bilinear/v", d, d);
    const std::size_t pairs = F * (F - 1) / 2;
    mlp_in = pairs > 0 ? 2 * pairs * d : 2 * d;
  }

  std::size_t in = mlp_in;
  for (std::size_t l = 0; l < config.mlp_dims.size(); ++l) {
    m.mlp_w_.push_back(add_xavier(fmt::format("mlp/{}/w", l), in, config.mlp_dims[l]));
    m.mlp_b_.push_back(add_zeros(fmt::format("mlp/{}/b", l), 1, config.mlp_dims[l]));
    in = config.mlp_dims[l];
  }
  const std::size_t out_in = config.kind == BackboneKind::kDCN ? F * d + in : in;
  m.out_w_ = add_xavier("out/w", out_in, 1);
  m.out_b_ = add_zeros("out/b", 1, 1);
  return m;
}

std::size_t Model::embedding_rows() const {
  std::size_t rows = 0;
  for (std::size_t f : selected_) rows += schema_[f].vocab_size;
  return rows;
}

Var Model::mlp(Tape& t, Var x, std::size_t first_layer) {
  for (std::size_t l = first_layer; l < mlp_w_.size(); ++l) x = op::relu(t, dense(t, x, *mlp_w_[l], *mlp_b_[l]));
  return x;
}

Var Model::forward(Tape& t, const Batch& batch, FieldHook* hook) {
  const std::size_t F = selected_.size();
  if (batch.values.size() != F) {
    throw DimensionError(fmt::format("forward: batch has {} fields, model has {}", batch.values.size(), F));
  }
  for (std::size_t s = 0; s < F; ++s) {
    const std::size_t vocab = slot_schema(s).vocab_size;
    for (std::uint32_t v : batch.values[s]) {
      if (v >= vocab) {
        throw BoundsError(fmt::format("field '{}': index {} outside vocab {}", slot_schema(s).name, v, vocab));
      }
    }
  }
  if (hook) hook->begin_forward(t, *this, batch);
  std::vector<Var> emb(F);
  std::vector<Var> lin;
  for (std::size_t s = 0; s < F; ++s) {
    const auto& idx = batch.values[s];
    emb[s] = op::embed_lookup(t, t.param(*embeddings_[s]), idx);
    std::optional<Var> gate = hook ? hook->gate(t, s, idx, emb[s]) : std::nullopt;
    if (gate) emb[s] = op::scale_rows(t, emb[s], *gate);
    if (!linear_.empty()) {
      Var l = op::embed_lookup(t, t.param(*linear_[s]), idx);
      if (gate) l = op::scale_rows(t, l, *gate);
      lin.push_back(l);
    }
  }

  auto sum_all = [&](std::span<const Var> parts) {
    Var acc = parts[0];
    for (std::size_t i = 1; i < parts.size(); ++i) acc = op::add(t, acc, parts[i]);
    return acc;
  };
  auto output = [&](Var h) { return op::add(t, op::matmul(t, h, t.param(*out_w_)), t.param(*out_b_)); };

  switch (config_.kind) {
    case BackboneKind::kWideDeep: {
      Var deep = output(mlp(t, op::concat(t, emb), 0));
      return op::add(t, sum_all(lin), deep);
    }
    case BackboneKind::kDeepFM: {
      Var deep = output(mlp(t, op::concat(t, emb), 0));
      Var fm = blocks::fm_pairwise(t, emb);
      return op::add(t, op::add(t, sum_all(lin), fm), deep);
    }
    case BackboneKind::kDCN: {
      Var x0 = op::concat(t, emb);
      Var xl = x0;
      for (std::size_t l = 0; l < cross_w_.size(); ++l) {
        xl = blocks::cross_layer(t, x0, xl, t.param(*cross_w_[l]), t.param(*cross_b_[l]));
      }
      Var h = mlp(t, x0, 0);
      const Var both[] = {xl, h};
      return output(op::concat(t, both));
    }
    case BackboneKind::kFibiNet: {
      std::vector<Var> pooled(F);
      for (std::size_t s = 0; s < F; ++s) pooled[s] = op::row_mean(t, emb[s]);
      Var z = op::concat(t, pooled);
      Var a = op::relu(t, dense(t, z, *senet_w1_, *senet_b1_));
      Var weights = op::relu(t, dense(t, a, *senet_w2_, *senet_b2_));
      std::vector<Var> reweighted(F);
      for (std::size_t s = 0; s < F; ++s) {
        reweighted[s] = op::scale_rows(t, emb[s], op::slice_cols(t, weights, s, s + 1));
      }
      std::vector<Var> features;
      if (F >= 2) {
        features = blocks::bilinear_pairs(t, emb, t.param(*bilinear_e_));
        auto more = blocks::bilinear_pairs(t, reweighted, t.param(*bilinear_v_));
        features.insert(features.end(), more.begin(), more.end());
      } else {
        features = {emb[0], reweighted[0]};
      }
      Var deep = output(mlp(t, op::concat(t, features), 0));
      return op::add(t, sum_all(lin), deep);
    }
  }
  throw ConfigError("forward: unknown backbone kind");
}

std::vector<double> Model::predict(const Dataset& data, Split split, FieldHook* hook, std::size_t batch_size) const {
  // A gradient-free tape only reads parameters, so forward() is safe to call
  // through a const model here.
  auto& self = const_cast<Model&>(*this);
  const auto rows = data.rows_of(split);
  std::vector<double> out;
  out.reserve(rows.size());
  Tape tape(/*grad_enabled=*/false);
  for (std::size_t start = 0; start < rows.size(); start += batch_size) {
    const std::size_t n = std::min(batch_size, rows.size() - start);
    const Batch b = make_batch(data, selected_, rows.subspan(start, n));
    Var p = op::sigmoid(tape, self.forward(tape, b, hook));
    for (double v : tape.value(p).data()) out.push_back(v);
    tape.clear();
  }
  return out;
}

std::string Model::encode_checkpoint() const {
  ByteWriter w;
  write_parameters(w, params_.all());
  w.u32(kArchMagic);
  w.str(to_string(config_.kind));
  w.u64(config_.embedding_dim);
  w.u64(config_.mlp_dims.size());
  for (std::size_t d : config_.mlp_dims) w.u64(d);
  w.u64(config_.cross_layers);
  w.u64(config_.senet_reduction);
  w.u64(selected_.size());
  for (std::size_t f : selected_) w.str(schema_[f].name);
  return w.buffer();
}

Model Model::decode_checkpoint(std::string_view bytes, const Schema& schema) {
  ByteReader r(bytes);
  auto values = read_parameters(r);
  if (r.u32() != kArchMagic) throw ConfigError("checkpoint: missing architecture block");
  BackboneConfig cfg;
  cfg.kind = parse_backbone(r.str());
  cfg.embedding_dim = r.u64();
  cfg.mlp_dims.resize(r.u64());
  for (auto& d : cfg.mlp_dims) d = r.u64();
  cfg.cross_layers = r.u64();
  cfg.senet_reduction = r.u64();
  std::vector<std::size_t> selected(r.u64());
  for (auto& f : selected) f = field_index(schema, r.str());
  if (!r.done()) throw ConfigError("checkpoint: trailing bytes");
  Model m = build(cfg, schema, std::move(selected), 0);
  if (values.size() != m.params_.size()) throw ConfigError("checkpoint: parameter count mismatch");
  for (auto& nt : values) {
    Parameter* p = m.params_.find(nt.name);
    if (!p || !p->value.same_shape(nt.value)) throw ConfigError("checkpoint: unexpected parameter " + nt.name);
    p->value = std::move(nt.value);
  }
  m.trained_ = true;
  return m;
}

namespace blocks {

Var fm_pairwise(Tape& t, std::span<const Var> embeddings) {
  if (embeddings.empty()) throw DimensionError("fm_pairwise: no embeddings");
  Var total = embeddings[0];
  Var squares = op::row_sum(t, op::mul(t, embeddings[0], embeddings[0]));
  for (std::size_t i = 1; i < embeddings.size(); ++i) {
    total = op::add(t, total, embeddings[i]);
    squares = op::add(t, squares, op::row_sum(t, op::mul(t, embeddings[i], embeddings[i])));
  }
  Var square_of_sum = op::row_sum(t, op::mul(t, total, total));
  return op::scale(t, op::sub(t, square_of_sum, squares), 0.5);
}

Var cross_layer(Tape& t, Var x0, Var xl, Var w, Var b) {
  Var proj = op::matmul(t, xl, w);
  return op::add(t, op::add(t, op::scale_rows(t, x0, proj), b), xl);
}

std::vector<Var> bilinear_pairs(Tape& t, std::span<const Var> embeddings, Var w) {
  std::vector<Var> out;
  std::vector<Var> projected(embeddings.size());
  for (std::size_t i = 0; i + 1 < embeddings.size(); ++i) projected[i] = op::matmul(t, embeddings[i], w);
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    for (std::size_t j = i + 1; j < embeddings.size(); ++j) out.push_back(op::mul(t, projected[i], embeddings[j]));
  }
  return out;
}

}  // namespace blocks
}  // namespace fsbench
