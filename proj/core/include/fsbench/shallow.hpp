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
#include <vector>

#include "fsbench/dataio.hpp"
#include "fsbench/ranking.hpp"
#include "fsbench/trees.hpp"

namespace fsbench {

struct LassoParams {
  double lambda = 1e-4;
  std::size_t epochs = 5;
  std::size_t batch_size = 512;
  double learning_rate = 0.05;
  std::size_t max_values = 100'000;  // per-field one-hot cap; larger indices share the OOV column
  std::uint64_t seed = 0;
};

/// L1-regularized logistic regression over one-hot field values.
struct LassoModel {
  std::vector<std::vector<double>> weights;  // [field][value]
  double bias = 0.0;
};

double soft_threshold(double w, double t);

/// Mini-batch proximal gradient: a gradient step on the mean log loss, then
/// soft-thresholding of every weight by learning_rate * lambda.
LassoModel fit_lasso(const Dataset& data, const LassoParams& params);

/// Field score: sum of |w| over the field's values.
ImportanceRanking lasso_rank(const Dataset& data, const LassoParams& params);
ImportanceRanking gbdt_rank(const Dataset& data, BoostParams params, std::uint64_t seed = 0);
ImportanceRanking xgb_rank(const Dataset& data, BoostParams params, std::uint64_t seed = 0);
ImportanceRanking rf_rank(const Dataset& data, const ForestParams& params, std::uint64_t seed);

}  // namespace fsbench
