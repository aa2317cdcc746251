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

// Shared fixtures and independent oracles for the unit and acceptance tests.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "fsbench/backbones.hpp"
#include "fsbench/dataio.hpp"
#include "fsbench/ranking.hpp"
#include "fsbench/trainer.hpp"

namespace fsbench::testing {

/// O(M*N) AUC over every positive/negative pair, ties counted 0.5.
double auc_pairwise(std::span<const double> scores, std::span<const std::uint8_t> labels);

/// Uniform AUKC written straight from its trapezoid definition.
double aukc_trapezoid(std::span<const double> auc_by_k);

/// Random categorical dataset with splits; labels depend on the first field.
Dataset random_dataset(std::size_t rows, std::vector<std::size_t> vocabs, std::uint64_t seed);

/// The planted problem used by the recovery and AUKC criteria.
SyntheticData planted(std::uint64_t seed, std::size_t n_samples = 50'000);

/// Ranking that follows the generator's ground truth exactly.
ImportanceRanking oracle_ranking(const SyntheticData& data);

/// Uniformly random order over the schema.
ImportanceRanking random_ranking(const Schema& schema, std::uint64_t seed);

/// Mean BCE (plus the plugin's extra loss) of one batch. With `backward`, the
/// parameter gradients are accumulated as a side effect.
double batch_loss(Model& model, const Batch& batch, TrainingPlugin* plugin, bool backward);

/// Fills every all-zero parameter (biases, first-order weights) with small
/// random values so no ReLU input sits exactly on its kink.
void randomize_zero_parameters(Model& model, std::uint64_t seed);

struct GradCheck {
  std::size_t checked = 0;
  std::size_t failed = 0;
  double worst_rel = 0.0;
  std::string worst;
};

/// Central finite differences against reverse-mode gradients on
/// `n_samples` entries with non-zero analytic gradient, spread over `params`.
GradCheck grad_check(Model& model, const Batch& batch, TrainingPlugin* plugin, std::vector<Parameter*> params,
                     std::size_t n_samples, std::uint64_t seed, double h = 1e-5, double rtol = 1e-4);

/// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace fsbench::testing
