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

#include "fsbench/trees.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "fsbench/error.hpp"
#include "fsbench/rng.hpp"

namespace fsbench {

double smoothed_rate(double positives, double count, double prior, double alpha) {
  return (positives + alpha * prior) / (count + alpha);
}

EncodedColumns target_encode(const Dataset& data, double alpha) {
  const auto train = data.rows_of(Split::kTrain);
  if (train.empty()) throw ConfigError("target encoding: empty train split");
  const auto labels = data.labels();
  double pos = 0.0;
  for (std::size_t r : train) pos += labels[r];
  EncodedColumns out;
  out.prior = pos / static_cast<double>(train.size());
  for (std::size_t f = 0; f < data.num_fields(); ++f) {
    const auto col = data.column(f);
    const std::size_t vocab = data.schema()[f].vocab_size;
    std::vector<double> count(vocab, 0.0), positives(vocab, 0.0);
    for (std::size_t r : train) {
      count[col[r]] += 1.0;
      positives[col[r]] += labels[r];
    }
    std::vector<double> rate(vocab);
    for (std::size_t v = 0; v < vocab; ++v) rate[v] = smoothed_rate(positives[v], count[v], out.prior, alpha);
    std::vector<double> encoded(col.size());
    for (std::size_t r = 0; r < col.size(); ++r) encoded[r] = rate[col[r]];
    out.columns.push_back(std::move(encoded));
  }
  return out;
}

double sse_split_gain(double sum_l, double n_l, double sum_r, double n_r) {
  const double s = sum_l + sum_r;
  return sum_l * sum_l / n_l + sum_r * sum_r / n_r - s * s / (n_l + n_r);
}

double newton_split_gain(double g_l, double h_l, double g_r, double h_r, double lambda, double gamma) {
  const double g = g_l + g_r;
  const double h = h_l + h_r;
  return 0.5 * (g_l * g_l / (h_l + lambda) + g_r * g_r / (h_r + lambda) - g * g / (h + lambda)) - gamma;
}

namespace {

double gini(double pos, double n) {
  if (n <= 0.0) return 0.0;
  const double p = pos / n;
  return 2.0 * p * (1.0 - p);
}

}  // namespace

double gini_decrease(double pos_l, double n_l, double pos_r, double n_r) {
  const double n = n_l + n_r;
  return n * gini(pos_l + pos_r, n) - n_l * gini(pos_l, n_l) - n_r * gini(pos_r, n_r);
}

double Tree::predict(const EncodedColumns& x, std::size_t row) const {
  std::size_t i = 0;
  while (nodes[i].feature >= 0) {
    const auto& n = nodes[i];
    i = static_cast<std::size_t>(x.columns[static_cast<std::size_t>(n.feature)][row] <= n.threshold ? n.left : n.right);
  }
  return nodes[i].value;
}

double TreeEnsemble::predict(const EncodedColumns& x, std::size_t row) const {
  double s = 0.0;
  for (const auto& t : trees) s += t.predict(x, row);
  return base_score + scale * s;
}

namespace {

enum class Criterion { kSquared, kNewton, kGini };

// Each column is replaced by the rank of its value among the column's
// distinct values, so a histogram over ranks enumerates every exact split.
struct Binned {
  std::vector<std::vector<std::uint32_t>> bin;  // [field][row]
  std::vector<std::vector<double>> edges;       // distinct sorted values per field
};

Binned bin_columns(const EncodedColumns& x) {
  Binned b;
  for (const auto& col : x.columns) {
    std::vector<double> values(col);
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    std::vector<std::uint32_t> idx(col.size());
    for (std::size_t r = 0; r < col.size(); ++r) {
      idx[r] = static_cast<std::uint32_t>(std::lower_bound(values.begin(), values.end(), col[r]) - values.begin());
    }
    b.bin.push_back(std::move(idx));
    b.edges.push_back(std::move(values));
  }
  return b;
}

struct GrowParams {
  Criterion criterion = Criterion::kSquared;
  std::size_t max_depth = 6;
  std::size_t min_samples_leaf = 1;
  double reg_lambda = 0.0;
  double gamma = 0.0;
  std::size_t max_features = 0;  // 0: all
};

// Per-row statistics: `a` is the split target (residual, gradient, or label),
// `b` the leaf denominator (hessian), one row may appear several times.
class TreeGrower {
 public:
  TreeGrower(const Binned& binned, std::span<const double> a, std::span<const double> b, const GrowParams& params,
             std::vector<double>& gain, std::size_t& splits, Rng* rng)
      : binned_(binned), a_(a), b_(b), params_(params), gain_(gain), splits_(splits), rng_(rng) {}

  Tree grow(std::vector<std::size_t> rows) {
    tree_ = Tree{};
    build(std::move(rows), 0);
    return std::move(tree_);
  }

 private:
  struct Candidate {
    int feature = -1;
    std::uint32_t bin = 0;
    double gain = 0.0;
  };

  double leaf_value(double sa, double sb, double n) const {
    switch (params_.criterion) {
      case Criterion::kSquared:
        return sa / std::max(sb, 1e-12);
      case Criterion::kNewton:
        return -sa / (sb + params_.reg_lambda);
      case Criterion::kGini:
        return sa / n;
    }
    return 0.0;
  }

  double split_gain(double al, double bl, double nl, double ar, double br, double nr) const {
    switch (params_.criterion) {
      case Criterion::kSquared:
        return sse_split_gain(al, nl, ar, nr);
      case Criterion::kNewton:
        return newton_split_gain(al, bl, ar, br, params_.reg_lambda, params_.gamma);
      case Criterion::kGini:
        return gini_decrease(al, nl, ar, nr);
    }
    return 0.0;
  }

  std::vector<std::size_t> candidate_features() {
    const std::size_t F = binned_.bin.size();
    std::vector<std::size_t> features(F);
    std::iota(features.begin(), features.end(), 0);
    if (rng_ && params_.max_features > 0 && params_.max_features < F) {
      for (std::size_t i = 0; i < params_.max_features; ++i) {
        std::swap(features[i], features[i + rng_->below(F - i)]);
      }
      features.resize(params_.max_features);
      std::sort(features.begin(), features.end());
    }
    return features;
  }

  int build(std::vector<std::size_t> rows, std::size_t depth) {
    double sa = 0.0, sb = 0.0;
    for (std::size_t r : rows) {
      sa += a_[r];
      sb += b_[r];
    }
    const double n = static_cast<double>(rows.size());
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back({-1, 0.0, -1, -1, leaf_value(sa, sb, n)});
    if (depth >= params_.max_depth || rows.size() < 2 * params_.min_samples_leaf) return id;

    Candidate best;
    const double min_leaf = static_cast<double>(params_.min_samples_leaf);
    for (std::size_t f : candidate_features()) {
      const auto& bins = binned_.bin[f];
      const std::size_t nb = binned_.edges[f].size();
      if (nb < 2) continue;
      std::vector<double> ha(nb, 0.0), hb(nb, 0.0), hn(nb, 0.0);
      for (std::size_t r : rows) {
        ha[bins[r]] += a_[r];
        hb[bins[r]] += b_[r];
        hn[bins[r]] += 1.0;
      }
      double al = 0.0, bl = 0.0, nl = 0.0;
      for (std::size_t k = 0; k + 1 < nb; ++k) {
        al += ha[k];
        bl += hb[k];
        nl += hn[k];
        if (hn[k] == 0.0) continue;
        const double nr = n - nl;
        if (nl < min_leaf || nr < min_leaf) continue;
        const double g = split_gain(al, bl, nl, sa - al, sb - bl, nr);
        if (g > best.gain + 1e-12) best = {static_cast<int>(f), static_cast<std::uint32_t>(k), g};
      }
    }
    if (best.feature < 0) return id;

    const auto f = static_cast<std::size_t>(best.feature);
    std::vector<std::size_t> left, right;
    for (std::size_t r : rows) (binned_.bin[f][r] <= best.bin ? left : right).push_back(r);
    rows = {};
    gain_[f] += best.gain;
    ++splits_;
    const auto& edges = binned_.edges[f];
    // The next occupied bin is at most the next distinct value; the midpoint
    // to the following edge keeps every left value <= threshold.
    const double threshold = 0.5 * (edges[best.bin] + edges[best.bin + 1]);
    const int l = build(std::move(left), depth + 1);
    const int r = build(std::move(right), depth + 1);
    auto& node = tree_.nodes[static_cast<std::size_t>(id)];
    node.feature = best.feature;
    node.threshold = threshold;
    node.left = l;
    node.right = r;
    return id;
  }

  const Binned& binned_;
  std::span<const double> a_;
  std::span<const double> b_;
  GrowParams params_;
  std::vector<double>& gain_;
  std::size_t& splits_;
  Rng* rng_;
  Tree tree_;
};

void require_two_classes(double prior) {
  if (prior <= 0.0 || prior >= 1.0) throw NumericError("degenerate model: train split labels are constant");
}

}  // namespace

TreeEnsemble fit_boosting(const EncodedColumns& x, const Dataset& data, const BoostParams& params) {
  if (params.n_trees < 1) throw ConfigError("boosting: n_trees must be >= 1");
  if (params.max_depth < 1) throw ConfigError("boosting: depth must be >= 1");
  if (params.reg_lambda < 0.0) throw ConfigError("boosting: reg_lambda must be >= 0");
  require_two_classes(x.prior);

  const Binned binned = bin_columns(x);
  const auto train = data.rows_of(Split::kTrain);
  const auto labels = data.labels();
  TreeEnsemble ens;
  ens.feature_gain.assign(x.columns.size(), 0.0);
  ens.base_score = std::log(x.prior / (1.0 - x.prior));
  ens.scale = params.shrinkage;

  GrowParams gp;
  gp.criterion = params.kind == BoostKind::kGradient ? Criterion::kSquared : Criterion::kNewton;
  gp.max_depth = params.max_depth;
  gp.min_samples_leaf = params.min_samples_leaf;
  gp.reg_lambda = params.reg_lambda;
  gp.gamma = params.gamma;

  const std::size_t rows = data.rows();
  std::vector<double> score(rows, ens.base_score);
  std::vector<double> a(rows, 0.0), b(rows, 0.0);
  TreeGrower grower(binned, a, b, gp, ens.feature_gain, ens.split_count, nullptr);
  const std::vector<std::size_t> train_rows(train.begin(), train.end());
  for (std::size_t t = 0; t < params.n_trees; ++t) {
    for (std::size_t r : train) {
      const double p = 1.0 / (1.0 + std::exp(-score[r]));
      const double y = labels[r];
      a[r] = params.kind == BoostKind::kGradient ? y - p : p - y;
      b[r] = p * (1.0 - p);
    }
    Tree tree = grower.grow(train_rows);
    for (std::size_t r : train) score[r] += params.shrinkage * tree.predict(x, r);
    ens.trees.push_back(std::move(tree));
  }
  return ens;
}

TreeEnsemble fit_forest(const EncodedColumns& x, const Dataset& data, const ForestParams& params,
                        std::uint64_t seed) {
  if (params.n_trees < 1) throw ConfigError("forest: n_trees must be >= 1");
  if (params.max_depth < 1) throw ConfigError("forest: depth must be >= 1");
  require_two_classes(x.prior);

  const Binned binned = bin_columns(x);
  const auto train = data.rows_of(Split::kTrain);
  const auto labels = data.labels();
  const std::size_t F = x.columns.size();

  TreeEnsemble ens;
  ens.feature_gain.assign(F, 0.0);
  ens.scale = 1.0 / static_cast<double>(params.n_trees);

  GrowParams gp;
  gp.criterion = Criterion::kGini;
  gp.max_depth = params.max_depth;
  gp.min_samples_leaf = params.min_samples_leaf;
  gp.max_features = params.max_features > 0
                        ? params.max_features
                        : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(F))));

  std::vector<double> a(data.rows(), 0.0), b(data.rows(), 1.0);
  for (std::size_t r : train) a[r] = labels[r];

  for (std::size_t t = 0; t < params.n_trees; ++t) {
    auto rng = Rng::derive(seed, "forest/tree", t);
    std::vector<std::size_t> sample(train.size());
    for (auto& r : sample) r = train[rng.below(train.size())];
    std::vector<double> tree_gain(F, 0.0);
    TreeGrower grower(binned, a, b, gp, tree_gain, ens.split_count, &rng);
    ens.trees.push_back(grower.grow(std::move(sample)));
    for (std::size_t f = 0; f < F; ++f) ens.feature_gain[f] += tree_gain[f] / static_cast<double>(train.size());
  }
  for (double& g : ens.feature_gain) g /= static_cast<double>(params.n_trees);
  return ens;
}

}  // namespace fsbench
