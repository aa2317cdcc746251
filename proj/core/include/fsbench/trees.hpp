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
#include <span>
#include <vector>

#include "fsbench/dataio.hpp"

namespace fsbench {

inline constexpr double kTargetEncodingAlpha = 20.0;

/// Smoothed positive rate of one category: (pos + alpha * prior) / (count + alpha).
double smoothed_rate(double positives, double count, double prior, double alpha = kTargetEncodingAlpha);

/// One numeric column per field holding the train-split smoothed positive
/// rate of each row's category. Categories unseen in train get the prior.
struct EncodedColumns {
  std::vector<std::vector<double>> columns;  // [field][row], every split
  double prior = 0.5;
};

EncodedColumns target_encode(const Dataset& data, double alpha = kTargetEncodingAlpha);

/// Squared-error split gain on residual sums: S_L^2/n_L + S_R^2/n_R - S^2/n.
double sse_split_gain(double sum_l, double n_l, double sum_r, double n_r);

/// Second-order split gain:
/// 0.5 * [G_L^2/(H_L+l) + G_R^2/(H_R+l) - (G_L+G_R)^2/(H_L+H_R+l)] - gamma.
double newton_split_gain(double g_l, double h_l, double g_r, double h_r, double lambda, double gamma);

/// Weighted Gini decrease: n*gini(parent) - n_l*gini(left) - n_r*gini(right).
double gini_decrease(double pos_l, double n_l, double pos_r, double n_r);

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

struct Tree {
  std::vector<TreeNode> nodes;
  /// `row` indexes the encoded columns.
  double predict(const EncodedColumns& x, std::size_t row) const;
};

enum class BoostKind { kGradient, kNewton };

struct BoostParams {
  BoostKind kind = BoostKind::kGradient;
  std::size_t n_trees = 100;
  std::size_t max_depth = 6;
  double shrinkage = 0.1;
  double reg_lambda = 1.0;  // Newton only
  double gamma = 0.0;       // Newton only
  std::size_t min_samples_leaf = 20;
};

struct ForestParams {
  std::size_t n_trees = 100;
  std::size_t max_depth = 8;
  std::size_t min_samples_leaf = 5;
  std::size_t max_features = 0;  // 0 means ceil(sqrt(F))
};

/// Trees plus per-feature accumulated split gain.
struct TreeEnsemble {
  std::vector<Tree> trees;
  std::vector<double> feature_gain;
  double base_score = 0.0;
  double scale = 1.0;  // forests average tree outputs
  std::size_t split_count = 0;

  double predict(const EncodedColumns& x, std::size_t row) const;
};

/// Logistic boosting on the train split. kGradient fits residual trees with
/// squared-error gain; kNewton uses gradient/hessian gain and leaf weights.
TreeEnsemble fit_boosting(const EncodedColumns& x, const Dataset& data, const BoostParams& params);

/// Bootstrap forest of Gini trees on the train split; feature gain is the
/// impurity decrease averaged over trees.
TreeEnsemble fit_forest(const EncodedColumns& x, const Dataset& data, const ForestParams& params, std::uint64_t seed);

}  // namespace fsbench
