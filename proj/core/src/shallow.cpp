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

#include "fsbench/shallow.hpp"

#include <cmath>

#include <fmt/format.h>

#include "fsbench/error.hpp"
#include "fsbench/rng.hpp"

namespace fsbench {

double soft_threshold(double w, double t) {
  if (w > t) return w - t;
  if (w < -t) return w + t;
  return 0.0;
}

LassoModel fit_lasso(const Dataset& data, const LassoParams& params) {
  if (params.lambda < 0.0) throw ConfigError("lasso: lambda must be >= 0");
  if (params.epochs < 1 || params.batch_size < 1) throw ConfigError("lasso: epochs and batch_size must be >= 1");
  if (params.max_values < 1) throw ConfigError("lasso: max_values must be >= 1");
  const auto train = data.rows_of(Split::kTrain);
  if (train.empty()) throw ConfigError("lasso: empty train split");

  const std::size_t F = data.num_fields();
  LassoModel model;
  std::vector<std::size_t> width(F);
  for (std::size_t f = 0; f < F; ++f) {
    width[f] = std::min(data.schema()[f].vocab_size, params.max_values);
    model.weights.emplace_back(width[f], 0.0);
  }
  auto column_of = [&](std::size_t f, std::uint32_t v) -> std::size_t { return v < width[f] ? v : 0; };

  const auto labels = data.labels();
  const double shrink = params.learning_rate * params.lambda;
  auto rng = Rng::derive(params.seed, "lasso/order");
  std::vector<std::size_t> order(train.begin(), train.end());
  std::vector<std::vector<double>> grad(F);
  for (std::size_t f = 0; f < F; ++f) grad[f].assign(width[f], 0.0);

  for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += params.batch_size) {
      const std::size_t end = std::min(order.size(), start + params.batch_size);
      const double inv_n = 1.0 / static_cast<double>(end - start);
      double grad_bias = 0.0;
      double loss = 0.0;
      for (std::size_t i = start; i < end; ++i) {
        const std::size_t r = order[i];
        double z = model.bias;
        for (std::size_t f = 0; f < F; ++f) z += model.weights[f][column_of(f, data.column(f)[r])];
        const double p = 1.0 / (1.0 + std::exp(-z));
        const double y = labels[r];
        loss -= y * std::log(std::max(p, 1e-15)) + (1.0 - y) * std::log(std::max(1.0 - p, 1e-15));
        const double e = (p - y) * inv_n;
        grad_bias += e;
        for (std::size_t f = 0; f < F; ++f) grad[f][column_of(f, data.column(f)[r])] += e;
      }
      if (!std::isfinite(loss)) {
        throw NumericError(fmt::format("lasso diverged (learning rate {}); try a lower learning rate",
                                       params.learning_rate));
      }
      model.bias -= params.learning_rate * grad_bias;
      for (std::size_t f = 0; f < F; ++f) {
        for (std::size_t v = 0; v < width[f]; ++v) {
          double& w = model.weights[f][v];
          w -= params.learning_rate * grad[f][v];
          if (shrink > 0.0) w = soft_threshold(w, shrink);
          grad[f][v] = 0.0;
        }
      }
    }
  }
  return model;
}

ImportanceRanking lasso_rank(const Dataset& data, const LassoParams& params) {
  const LassoModel model = fit_lasso(data, params);
  std::vector<double> scores;
  for (const auto& w : model.weights) {
    double s = 0.0;
    for (double v : w) s += std::abs(v);
    scores.push_back(s);
  }
  return ImportanceRanking::from_scores(data.schema(), scores, "lasso", params.seed);
}

ImportanceRanking gbdt_rank(const Dataset& data, BoostParams params, std::uint64_t seed) {
  params.kind = BoostKind::kGradient;
  const auto ens = fit_boosting(target_encode(data), data, params);
  return ImportanceRanking::from_scores(data.schema(), ens.feature_gain, "gbdt", seed);
}

ImportanceRanking xgb_rank(const Dataset& data, BoostParams params, std::uint64_t seed) {
  params.kind = BoostKind::kNewton;
  const auto ens = fit_boosting(target_encode(data), data, params);
  return ImportanceRanking::from_scores(data.schema(), ens.feature_gain, "xgb", seed);
}

ImportanceRanking rf_rank(const Dataset& data, const ForestParams& params, std::uint64_t seed) {
  const auto ens = fit_forest(target_encode(data), data, params, seed);
  return ImportanceRanking::from_scores(data.schema(), ens.feature_gain, "rf", seed);
}

}  // namespace fsbench
