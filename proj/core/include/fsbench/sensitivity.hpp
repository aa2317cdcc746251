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
#include <vector>

#include "fsbench/backbones.hpp"
#include "fsbench/ranking.hpp"
#include "fsbench/trainer.hpp"

namespace fsbench {

/// Raw per-field sensitivities behind a ranking, over every schema field.
struct SensitivityReport {
  std::string method;
  std::vector<std::string> fields;
  std::vector<double> score;
  std::vector<double> stddev;  // over repeats (Permutation) or batches (SHARK, SFS)
  std::size_t batches = 0;
  std::optional<double> base_auc;    // Permutation only
  std::vector<double> permuted_auc;  // Permutation only, mean over repeats

  /// Columns: field,score,std (plus permuted_auc for Permutation).
  std::string to_csv() const;
};

struct SensitivityResult {
  ImportanceRanking ranking;
  SensitivityReport report;
};

struct PermutationParams {
  std::size_t n_repeats = 3;
};

/// Mean validation-AUC drop when one field's validation column is shuffled.
SensitivityResult permutation_rank(const Model& model, const Dataset& data, const PermutationParams& params,
                                   std::uint64_t seed);

struct SharkParams {
  std::size_t n_batches = 50;
  std::size_t batch_size = 4096;
};

/// Per-slot sums over the batch of |dL/de_f . e_f| under a summed loss.
/// Parameter gradients are cleared afterwards.
std::vector<double> shark_batch_scores(Model& model, const Batch& batch);

/// Mean first-order Taylor magnitude over validation batches.
SensitivityResult shark_rank(Model& model, const Dataset& data, const SharkParams& params, std::uint64_t seed);

struct SfsParams {
  std::size_t n_batches = 100;
};

/// dL/dg per slot for scalar gates held at `gate_values` (mean batch loss).
/// Model parameter gradients are accumulated, not cleared.
std::vector<double> sfs_gate_gradients(Model& model, const Batch& batch, std::span<const double> gate_values);

/// Gates fixed at 1 on a freshly initialized model; mean |dL/dg| while the
/// model trains through its first n_batches train batches (at most one epoch).
SensitivityResult sfs_rank(const Dataset& data, const BackboneConfig& backbone, const TrainConfig& train,
                           const SfsParams& params);

}  // namespace fsbench
