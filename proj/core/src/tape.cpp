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

#include "fsbench/tape.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Core>
#include <fmt/format.h>

#include "fsbench/error.hpp"

namespace fsbench {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapC = Eigen::Map<const RowMat>;
using Map = Eigen::Map<RowMat>;

MapC view(const Tensor& t) { return MapC(t.data().data(), t.rows(), t.cols()); }
Map view(Tensor& t) { return Map(t.data().data(), t.rows(), t.cols()); }

void require_rank2(const Tensor& t, const char* op) {
  if (t.rank() != 2) throw DimensionError(fmt::format("{}: expected rank-2 tensor, got {}", op, t.shape_string()));
}

void require_same(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b)) {
    throw DimensionError(fmt::format("{}: shapes {} and {} differ", op, a.shape_string(), b.shape_string()));
  }
}

}  // namespace

const Tensor& Gradients::operator[](Var v) const {
  auto it = grads_.find(v.id);
  if (it == grads_.end() || v.generation != generation_) {
    throw ProtocolError("no gradient recorded for this node (not marked or watched)");
  }
  return it->second;
}

std::uint32_t Tape::check(Var v, const char* op) const {
  if (v.generation != generation_ || v.id >= nodes_.size()) {
    throw ProtocolError(fmt::format("{}: variable was not produced by this tape", op));
  }
  return v.id;
}

Var Tape::record(Tensor value, std::initializer_list<Var> parents, BackwardFn fn) {
  return record(std::move(value), std::span<const Var>(parents.begin(), parents.size()), std::move(fn));
}

Var Tape::record(Tensor value, std::span<const Var> parents, BackwardFn fn) {
#ifndef NDEBUG
  if (!value.all_finite()) throw NumericError("non-finite value in forward pass");
#endif
  bool needs = false;
  for (Var p : parents) needs = needs || nodes_[check(p, "record")].requires_grad;
  Node node;
  node.value = std::move(value);
  node.requires_grad = needs;
  if (needs) node.backward = std::move(fn);
  nodes_.push_back(std::move(node));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1), generation_};
}

Var Tape::constant(Tensor value) {
  Node node;
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1), generation_};
}

Var Tape::input(Tensor value, bool requires_grad) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = requires_grad && grad_enabled_;
  node.keep_grad = node.requires_grad;
  nodes_.push_back(std::move(node));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1), generation_};
}

Var Tape::param(Parameter& p) {
  auto it = param_nodes_.find(&p);
  if (it != param_nodes_.end()) return Var{it->second, generation_};
  const bool needs = grad_enabled_ && p.trainable;
  if (needs && !p.grad.same_shape(p.value)) p.grad = Tensor::zeros_like(p.value);
  Node node;
  node.ref = &p.value;
  node.param = &p;
  node.requires_grad = needs;
  nodes_.push_back(std::move(node));
  const auto id = static_cast<std::uint32_t>(nodes_.size() - 1);
  param_nodes_.emplace(&p, id);
  return Var{id, generation_};
}

void Tape::watch(Var v) { nodes_[check(v, "watch")].keep_grad = true; }

const Tensor& Tape::value(Var v) const { return node_value(check(v, "value")); }

bool Tape::requires_grad(Var v) const { return nodes_[check(v, "requires_grad")].requires_grad; }

const Tensor& Tape::node_value(std::uint32_t id) const {
  const Node& n = nodes_[id];
  return n.ref ? *n.ref : n.value;
}

Tensor* Tape::grad_target(std::uint32_t id) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return nullptr;
  if (n.param) return &n.param->grad;
  if (n.grad.empty()) n.grad = Tensor::zeros_like(node_value(id));
  return &n.grad;
}

Gradients Tape::backward(Var loss) {
  const std::uint32_t root = check(loss, "backward");
  if (node_value(root).size() != 1) {
    throw DimensionError("backward: loss must be a scalar, got " + node_value(root).shape_string());
  }
  Gradients out;
  out.generation_ = generation_;
  if (nodes_[root].requires_grad) {
    if (Tensor* g = grad_target(root)) (*g)[0] += 1.0;
    for (std::uint32_t id = root + 1; id-- > 0;) {
      Node& n = nodes_[id];
      if (!n.requires_grad || !n.backward || n.grad.empty()) continue;
      n.backward(*this, id);
    }
  }
  for (std::uint32_t id = 0; id < nodes_.size(); ++id) {
    Node& n = nodes_[id];
    if (!n.keep_grad) continue;
    out.grads_.emplace(id, n.grad.empty() ? Tensor::zeros_like(node_value(id)) : std::move(n.grad));
  }
  clear();
  return out;
}

void Tape::clear() {
  nodes_.clear();
  param_nodes_.clear();
  ++generation_;
}

namespace op {

Var embed_lookup(Tape& t, Var table, std::span<const std::uint32_t> indices) {
  const Tensor& tab = t.value(table);
  require_rank2(tab, "embed_lookup");
  const std::size_t d = tab.cols();
  Tensor out(indices.size(), d);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= tab.rows()) {
      throw BoundsError(fmt::format("embed_lookup: index {} >= table rows {}", indices[i], tab.rows()));
    }
    std::copy_n(tab.data().begin() + indices[i] * d, d, out.data().begin() + i * d);
  }
  std::vector<std::uint32_t> idx(indices.begin(), indices.end());
  return t.record(std::move(out), {table}, [table, idx = std::move(idx), d](Tape& tp, std::uint32_t self) {
    Tensor* g = tp.grad_target(table.id);
    if (!g) return;
    const Tensor& go = tp.node_grad(self);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      double* dst = g->data().data() + idx[i] * d;
      const double* src = go.data().data() + i * d;
      for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
    }
  });
}

Var matmul(Tape& t, Var a, Var b) {
  const Tensor& A = t.value(a);
  const Tensor& B = t.value(b);
  require_rank2(A, "matmul");
  require_rank2(B, "matmul");
  if (A.cols() != B.rows()) {
    throw DimensionError(fmt::format("matmul: {} x {} inner dimensions differ", A.shape_string(), B.shape_string()));
  }
  Tensor out(A.rows(), B.cols());
  view(out).noalias() = view(A) * view(B);
  return t.record(std::move(out), {a, b}, [a, b](Tape& tp, std::uint32_t self) {
    const Tensor& go = tp.node_grad(self);
    if (Tensor* ga = tp.grad_target(a.id)) view(*ga).noalias() += view(go) * view(tp.node_value(b.id)).transpose();
    if (Tensor* gb = tp.grad_target(b.id)) view(*gb).noalias() += view(tp.node_value(a.id)).transpose() * view(go);
  });
}

Var add(Tape& t, Var a, Var b) {
  const Tensor& A = t.value(a);
  const Tensor& B = t.value(b);
  require_rank2(A, "add");
  const bool bias = !A.same_shape(B) && B.rank() == 2 && B.rows() == 1 && B.cols() == A.cols();
  if (!bias) require_same(A, B, "add");
  Tensor out = A;
  if (bias) {
    for (std::size_t r = 0; r < A.rows(); ++r) {
      for (std::size_t c = 0; c < A.cols(); ++c) out.at(r, c) += B[c];
    }
  } else {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += B[i];
  }
  return t.record(std::move(out), {a, b}, [a, b, bias](Tape& tp, std::uint32_t self) {
    const Tensor& go = tp.node_grad(self);
    if (Tensor* ga = tp.grad_target(a.id)) {
      for (std::size_t i = 0; i < go.size(); ++i) (*ga)[i] += go[i];
    }
    if (Tensor* gb = tp.grad_target(b.id)) {
      if (bias) {
        const std::size_t cols = go.cols();
        for (std::size_t r = 0; r < go.rows(); ++r) {
          for (std::size_t c = 0; c < cols; ++c) (*gb)[c] += go.at(r, c);
        }
      } else {
        for (std::size_t i = 0; i < go.size(); ++i) (*gb)[i] += go[i];
      }
    }
  });
}

Var sub(Tape& t, Var a, Var b) {
  const Tensor& A = t.value(a);
  const Tensor& B = t.value(b);
  require_same(A, B, "sub");
  Tensor out = A;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= B[i];
  return t.record(std::move(out), {a, b}, [a, b](Tape& tp, std::uint32_t self) {
    const Tensor& go = tp.node_grad(self);
    if (Tensor* ga = tp.grad_target(a.id)) {
      for (std::size_t i = 0; i < go.size(); ++i) (*ga)[i] += go[i];
    }
    if (Tensor* gb = tp.grad_target(b.id)) {
      for (std::size_t i = 0; i < go.size(); ++i) (*gb)[i] -= go[i];
    }
  });
}

Var mul(Tape& t, Var a, Var b) {
  const Tensor& A = t.value(a);
  const Tensor& B = t.value(b);
  require_same(A, B, "mul");
  Tensor out = A;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= B[i];
  return t.record(std::move(out), {a, b}, [a, b](Tape& tp, std::uint32_t self) {
    const Tensor& go = tp.node_grad(self);
    if (Tensor* ga = tp.grad_target(a.id)) {
      const Tensor& bv = tp.node_value(b.id);
      for (std::size_t i = 0; i < go.size(); ++i) (*ga)[i] += go[i] * bv[i];
    }
    if (Tensor* gb = tp.grad_target(b.id)) {
      const Tensor& av = tp.node_value(a.id);
      for (std::size_t i = 0; i < go.size(); ++i) (*gb)[i] += go[i] * av[i];
    }
  });
}

Var div(Tape& t, Var a, Var b) {
  const Tensor& A = t.value(a);
  const Tensor& B = t.value(b);
  require_same(A, B, "div");
  Tensor out = A;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] /= B[i];
  return t.record(std::move(out), {a, b}, [a, b](Tape& tp, std::uint32_t self) {
    const Tensor& go = tp.node_grad(self);
    const Tensor& av = tp.node_value(a.id);
    const Tensor& bv = tp.node_value(b.id);
    if (Tensor* ga = tp.grad_target(a.id)) {
      for (std::size_t i = 0; i < go.size(); ++i) (*ga)[i] += go[i] / bv[i];
    }
    if (Tensor* gb = tp.grad_target(b.id)) {
      for (std::size_t i = 0; i < go.size(); ++i) (*gb)[i] -= go[i] * av[i] / (bv[i] * bv[i]);
    }
  });
}

Var scale(Tape& t, Var a, double c) {
  Tensor out = t.value(a);
  for (double& v : out.data()) v *= c;
  return t.record(std::move(out), {a}, [a, c](Tape& tp, std::uint32_t self) {
    const Tensor& go = tp.node_grad(self);
    if (Tensor* ga = tp.grad_target(a.id)) {
      for (std::size_t i = 0; i < go.size(); ++i) (*ga)[i] += c * go[i];
    }
  });
}

Var add_scalar(Tape& t, Var a, double c) {
  Tensor out = t.value(a);
  for (double& v : out.data()) v += c;
  return t.record(std::move(out), {a}, [a](Tape& tp, std::uint32_t self) {
    const Tensor& go = tp.node_grad(self);
    if (Tensor* ga = tp.grad_target(a.id)) {
      for (std::size_t i = 0; i < go.size(); ++i) (*ga)[i] += go[i];
    }
  });
}

Var scale_rows(Tape& t, Var x, Var s) {
  const Tensor& X = t.value(x);
  const Tensor& S = t.value(s);
  require_rank2(X, "scale_rows");
  const bool scalar = S.size() == 1;
  if (!scalar && (S.rank() != 2 || S.rows() != X.rows() || S.cols() != 1)) {
    throw DimensionError(fmt::format("scale_rows: scale {} does not match {}", S.shape_string(), X.shape_string()));
  }
  Tensor out = X;
  const std::size_t cols = X.cols();
  for (std::size_t r = 0; r < X.rows(); ++r) {
    const double k = scalar ? S[0] : S[r];
    for (std::size_t c = 0; c < cols; ++c) out.at(r, c) *= k;
  }
  return t.record(std::move(out), {x, s}, [x, s, scalar](Tape& tp, std::uint32_t self) {
    const Tensor& go = tp.node_grad(self);
    const Tensor& xv = tp.node_value(x.id);
    const Tensor& sv = tp.node_value(s.id);
    const std::size_t cols = go.cols();
    if (Tensor* gx = tp.grad_target(x.id)) {
      for (std::size_t r = 0; r < go.rows(); ++r) {
        const double k = scalar ? sv[0] : sv[r];
        for (std::size_t c = 0; c < cols; ++c) gx->at(r, c) += go.at(r, c) * k;
      }
    }
    if (Tensor* gs = tp.grad_target(s.id)) {
      for (std::size_t r = 0; r < go.rows(); ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < cols; ++c) acc += go.at(r, c) * xv.at(r, c);
        (*gs)[scalar ? 0 : r] += acc;
      }
    }
  });
}

Var concat(Tape& t, std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat: no inputs");
  const std::size_t rows = t.value(parts[0]).rows();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (Var p : parts) {
    const Tensor& v = t.value(p);
    require_rank2(v, "concat");
    if (v.rows() != rows) throw DimensionError(fmt::format("concat: row counts {} and {} differ", rows, v.rows()));
    widths.push_back(v.cols());
    total += v.cols();
  }
  Tensor out(rows, total);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& v = t.value(parts[k]);
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(v.data().begin() + r * widths[k], widths[k], out.data().begin() + r * total + offset);
    }
    offset += widths[k];
  }
  std::vector<Var> ps(parts.begin(), parts.end());
  return t.record(std::move(out), parts, [ps, widths, total](Tape& tp, std::uint32_t self) {
    const Tensor& go = tp.node_grad(self);
    std::size_t offset = 0;
    for (std::size_t k = 0; k < ps.size(); ++k) {
      if (Tensor* g = tp.grad_target(ps[k].id)) {
        for (std::size_t r = 0; r < go.rows(); ++r) {
          const double* src = go.data().data() + r * total + offset;
          double* dst = g->data().data() + r * widths[k];
          for (std::size_t c = 0; c < widths[k]; ++c) dst[c] += src[c];
        }
      }
      offset += widths[k];
    }
  });
}

Var slice_cols(Tape& t, Var x, std::size_t begin, std::size_t end) {
  const Tensor& X = t.value(x);
  require_rank2(X, "slice_cols");
  if (begin >= end || end > X.cols()) {
    throw DimensionError(fmt::format("slice_cols: [{}, {}) outside {} columns", begin, end, X.cols()));
  }
  const std::size_t w = end - begin;
  Tensor out(X.rows(), w);
  for (std::size_t r = 0; r < X.rows(); ++r) {
    std::copy_n(X.data().begin() + r * X.cols() + begin, w, out.data().begin() + r * w);
  }
  return t.record(std::move(out), {x}, [x, begin, w](Tape& tp, std::uint32_t self) {
    Tensor* g = tp.grad_target(x.id);
    if (!g) return;
    const Tensor& go = tp.node_grad(self);
    const std::size_t cols = g->cols();
    for (std::size_t r = 0; r < go.rows(); ++r) {
      for (std::size_t c = 0; c < w; ++c) (*g)[r * cols + begin + c] += go[r * w + c];
    }
  });
}

Var sum(Tape& t, Var x) {
  const Tensor& X = t.value(x);
  double acc = 0.0;
  for (double v : X.data()) acc += v;
  return t.record(Tensor::scalar(acc), {x}, [x](Tape& tp, std::uint32_t self) {
    Tensor* g = tp.grad_target(x.id);
    if (!g) return;
    const double go = tp.node_grad(self)[0];
    for (double& v : g->data()) v += go;
  });
}

Var mean(Tape& t, Var x) {
  const std::size_t n = t.value(x).size();
  if (n == 0) throw DimensionError("mean: empty tensor");
  return scale(t, sum(t, x), 1.0 / static_cast<double>(n));
}

Var row_sum(Tape& t, Var x) {
  const Tensor& X = t.value(x);
  require_rank2(X, "row_sum");
  Tensor out(X.rows(), 1);
  const std::size_t cols = X.cols();
  for (std::size_t r = 0; r < X.rows(); ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += X.at(r, c);
    out[r] = acc;
  }
  return t.record(std::move(out), {x}, [x](Tape& tp, std::uint32_t self) {
    Tensor* g = tp.grad_target(x.id);
    if (!g) return;
    const Tensor& go = tp.node_grad(self);
    const std::size_t cols = g->cols();
    for (std::size_t r = 0; r < g->rows(); ++r) {
      for (std::size_t c = 0; c < cols; ++c) g->at(r, c) += go[r];
    }
  });
}

Var row_mean(Tape& t, Var x) {
  const std::size_t cols = t.value(x).cols();
  if (cols == 0) throw DimensionError("row_mean: no columns");
  return scale(t, row_sum(t, x), 1.0 / static_cast<double>(cols));
}

Var relu(Tape& t, Var x) {
  Tensor out = t.value(x);
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  return t.record(std::move(out), {x}, [x](Tape& tp, std::uint32_t self) {
    Tensor* g = tp.grad_target(x.id);
    if (!g) return;
    const Tensor& go = tp.node_grad(self);
    const Tensor& xv = tp.node_value(x.id);
    for (std::size_t i = 0; i < go.size(); ++i) {
      if (xv[i] > 0.0) (*g)[i] += go[i];
    }
  });
}

Var sigmoid(Tape& t, Var x) {
  Tensor out = t.value(x);
  for (double& v : out.data()) {
    v = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  }
  return t.record(std::move(out), {x}, [x](Tape& tp, std::uint32_t self) {
    Tensor* g = tp.grad_target(x.id);
    if (!g) return;
    const Tensor& go = tp.node_grad(self);
    const Tensor& y = tp.node_value(self);
    for (std::size_t i = 0; i < go.size(); ++i) (*g)[i] += go[i] * y[i] * (1.0 - y[i]);
  });
}

Var softmax(Tape& t, Var x) {
  const Tensor& X = t.value(x);
  require_rank2(X, "softmax");
  Tensor out = X;
  const std::size_t cols = X.cols();
  for (std::size_t r = 0; r < X.rows(); ++r) {
    double* row = out.data().data() + r * cols;
    const double mx = *std::max_element(row, row + cols);
    double z = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      row[c] = std::exp(row[c] - mx);
      z += row[c];
    }
    for (std::size_t c = 0; c < cols; ++c) row[c] /= z;
  }
  return t.record(std::move(out), {x}, [x](Tape& tp, std::uint32_t self) {
    Tensor* g = tp.grad_target(x.id);
    if (!g) return;
    const Tensor& go = tp.node_grad(self);
    const Tensor& y = tp.node_value(self);
    const std::size_t cols = y.cols();
    for (std::size_t r = 0; r < y.rows(); ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < cols; ++c) dot += go.at(r, c) * y.at(r, c);
      for (std::size_t c = 0; c < cols; ++c) g->at(r, c) += y.at(r, c) * (go.at(r, c) - dot);
    }
  });
}

Var detach(Tape& t, Var x) { return t.constant(t.value(x)); }

Var bce_loss(Tape& t, Var probs, std::span<const double> labels, Reduction reduction) {
  const Tensor& P = t.value(probs);
  if (P.size() != labels.size()) {
    throw DimensionError(fmt::format("bce_loss: {} predictions for {} labels", P.size(), labels.size()));
  }
  if (P.size() == 0) throw DimensionError("bce_loss: empty batch");
  const double denom = reduction == Reduction::kMean ? static_cast<double>(P.size()) : 1.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < P.size(); ++i) {
    const double p = std::clamp(P[i], kProbClamp, 1.0 - kProbClamp);
    acc -= labels[i] * std::log(p) + (1.0 - labels[i]) * std::log(1.0 - p);
  }
  std::vector<double> y(labels.begin(), labels.end());
  return t.record(Tensor::scalar(acc / denom), {probs}, [probs, y = std::move(y), denom](Tape& tp, std::uint32_t self) {
    Tensor* g = tp.grad_target(probs.id);
    if (!g) return;
    const double go = tp.node_grad(self)[0] / denom;
    const Tensor& pv = tp.node_value(probs.id);
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double p = pv[i];
      if (p < kProbClamp || p > 1.0 - kProbClamp) continue;  // clamped: flat
      (*g)[i] += go * (-(y[i] / p) + (1.0 - y[i]) / (1.0 - p));
    }
  });
}

}  // namespace op
}  // namespace fsbench
