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
#include <functional>
#include <initializer_list>
#include <span>
#include <unordered_map>
#include <vector>

#include "fsbench/tensor.hpp"

namespace fsbench {

class Tape;

/// Handle to a node recorded on a Tape. Handles from a cleared tape are stale.
struct Var {
  std::uint32_t id = 0;
  std::uint64_t generation = 0;
};

/// Gradients returned by Tape::backward for marked inputs and watched nodes.
class Gradients {
 public:
  bool contains(Var v) const { return grads_.count(v.id) && v.generation == generation_; }
  const Tensor& operator[](Var v) const;

 private:
  friend class Tape;
  std::uint64_t generation_ = 0;
  std::unordered_map<std::uint32_t, Tensor> grads_;
};

/// Records a forward computation so gradients can be pulled back in one
/// reverse sweep. Nodes are appended in evaluation order, so the node list is
/// topologically sorted by construction.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::uint32_t self)>;

  /// A tape with gradients disabled records values only; it never writes
  /// parameter gradients.
  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  /// A marked input: its gradient is reported by backward() when requires_grad.
  Var input(Tensor value, bool requires_grad = true);
  /// Leaf referring to a parameter; gradients accumulate into `p.grad` when
  /// the parameter is trainable. Repeated calls reuse one node.
  Var param(Parameter& p);
  /// Keep the gradient of an intermediate node in the backward result.
  void watch(Var v);

  const Tensor& value(Var v) const;
  bool requires_grad(Var v) const;
  std::size_t size() const noexcept { return nodes_.size(); }
  bool grad_enabled() const noexcept { return grad_enabled_; }

  /// Reverse sweep from a scalar loss. Parameter gradients are accumulated,
  /// marked/watched gradients are returned, and the tape is cleared.
  Gradients backward(Var loss);
  void clear();

  // Op-implementation interface.
  Var record(Tensor value, std::initializer_list<Var> parents, BackwardFn fn);
  Var record(Tensor value, std::span<const Var> parents, BackwardFn fn);
  const Tensor& node_value(std::uint32_t id) const;
  const Tensor& node_grad(std::uint32_t id) const { return nodes_[id].grad; }
  /// Accumulation target for a parent's gradient; nullptr when the parent
  /// does not need one.
  Tensor* grad_target(std::uint32_t id);
  std::uint32_t check(Var v, const char* op) const;

 private:
  struct Node {
    Tensor value;
    const Tensor* ref = nullptr;  // parameter leaves alias the parameter value
    Parameter* param = nullptr;
    Tensor grad;
    bool requires_grad = false;
    bool keep_grad = false;
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, std::uint32_t> param_nodes_;
  std::uint64_t generation_ = 1;
  bool grad_enabled_ = true;
};

enum class Reduction { kMean, kSum };

/// Differentiable operations. Shapes must match exactly, except the bias in
/// add() (1 x n broadcast over rows) and the per-row scale in scale_rows().
namespace op {

Var embed_lookup(Tape& t, Var table, std::span<const std::uint32_t> indices);
Var matmul(Tape& t, Var a, Var b);
Var add(Tape& t, Var a, Var b);
Var sub(Tape& t, Var a, Var b);
Var mul(Tape& t, Var a, Var b);
Var div(Tape& t, Var a, Var b);
Var scale(Tape& t, Var a, double c);
Var add_scalar(Tape& t, Var a, double c);
/// x (n x m) times s, where s is (n x 1) per-row or (1 x 1).
Var scale_rows(Tape& t, Var x, Var s);
Var concat(Tape& t, std::span<const Var> parts);
Var slice_cols(Tape& t, Var x, std::size_t begin, std::size_t end);
Var sum(Tape& t, Var x);
Var mean(Tape& t, Var x);
Var row_sum(Tape& t, Var x);
Var row_mean(Tape& t, Var x);
Var relu(Tape& t, Var x);
Var sigmoid(Tape& t, Var x);
Var softmax(Tape& t, Var x);
/// Stops gradient flow: a constant copy of x.
Var detach(Tape& t, Var x);
/// Binary cross entropy of probabilities (n x 1) against 0/1 labels, with
/// probabilities clamped to [1e-7, 1 - 1e-7].
Var bce_loss(Tape& t, Var probs, std::span<const double> labels, Reduction reduction = Reduction::kMean);

inline constexpr double kProbClamp = 1e-7;

}  // namespace op
}  // namespace fsbench
