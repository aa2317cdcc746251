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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fsbench/backbones.hpp"
#include "fsbench/metrics.hpp"
#include "fsbench/run_store.hpp"
#include "fsbench/selectors.hpp"
#include "fsbench/trainer.hpp"

namespace fsbench {

/// Hash of a dataset's schema, columns, labels, and split assignment.
std::string dataset_fingerprint(const Dataset& data);

/// Everything a protocol needs besides the selector and seeds.
struct Experiment {
  const Dataset* data = nullptr;
  std::string dataset_id;  // defaults to the fingerprint
  BackboneConfig backbone;
  TrainConfig train;
  SelectorParams selectors;
  RunStore* store = nullptr;
  std::size_t workers = 1;
  std::function<void(std::string_view)> log;  // progress lines, optional

  const Dataset& dataset() const;
  RunStore& runs() const;
  void validate() const;
};

/// No-selection model on every field. Its checkpoint is kept as an artifact.
RunRecord run_baseline(const Experiment& exp, std::uint64_t seed);

/// The trained baseline model, loaded from the store or trained on demand.
Model baseline_model(const Experiment& exp, std::uint64_t seed);

struct SearchOutcome {
  ImportanceRanking ranking;
  std::optional<ValueMask> mask;  // OptFS only
  RunRecord record;
};

/// Cache key of a selector's searching phase.
RunSpec search_spec(const Experiment& exp, SelectorId selector, std::uint64_t seed);

/// Searching phase of a two-stage selector. Rejects selectors without a ranking.
SearchOutcome run_search(const Experiment& exp, SelectorId selector, std::uint64_t seed);

/// Retrain on an explicit field set (schema indices). Hard selection builds a
/// model on those fields only; soft selection masks the others to zero.
RunRecord run_fields_retrain(const Experiment& exp, std::string_view label, std::vector<std::size_t> fields,
                             std::uint64_t seed, SelectionType selection);

/// Retrain on the selector's top-k fields.
RunRecord run_retrain(const Experiment& exp, SelectorId selector, std::uint64_t seed, std::size_t k,
                      SelectionType selection = SelectionType::kHard);

/// OptFS value-level path: all fields, dropped values zeroed, memory counted
/// in kept embedding rows.
RunRecord run_value_retrain(const Experiment& exp, std::uint64_t seed);

/// Uniform AUKC for complete curves, segmented otherwise.
double curve_aukc(const KCurve& curve);

struct CurveResult {
  std::string label;
  std::vector<std::uint64_t> seeds;
  std::vector<KCurve> per_seed;
  KCurve mean;
  std::vector<double> aukc_per_seed;
  double aukc_mean = 0.0;
  std::vector<RunRecord> records;
};

using RankingSource = std::function<ImportanceRanking(std::uint64_t seed)>;

/// Top-k retrains along a ranking for every k and seed. When the grid stops
/// short of |K|, the baseline supplies the |K| point so AUKC can be tiled.
CurveResult run_ranking_curve(const Experiment& exp, std::string_view label, const RankingSource& ranking,
                              std::span<const std::size_t> ks, std::span<const std::uint64_t> seeds,
                              SelectionType selection = SelectionType::kHard);

CurveResult run_two_stage(const Experiment& exp, SelectorId selector, std::span<const std::size_t> ks,
                          std::span<const std::uint64_t> seeds, SelectionType selection = SelectionType::kHard);

struct SingleStageSummary {
  std::vector<RunRecord> records;
  double mean_auc = 0.0;
  double std_auc = 0.0;
  double mean_logloss = 0.0;
  std::string best_mode;  // "single_stage" or "retrain" when both modes ran
};

/// Joint training with direct evaluation. LPFS also runs its two-stage mode
/// (retrain on fields with gate >= 0.5) and reports the better mean test AUC.
SingleStageSummary run_single_stage(const Experiment& exp, SelectorId selector, std::span<const std::uint64_t> seeds,
                                    SelectionType selection = SelectionType::kSoft);

/// (1 - loss_fraction) * baseline.
double performance_threshold(double baseline_auc, double loss_fraction);

struct ThresholdResult {
  double baseline_auc = 0.0;
  double threshold = 0.0;
  bool reached = false;
  std::size_t k = 0;
  double auc = 0.0;
  double memory_remain = 0.0;
  double best_auc = 0.0;  // reported when no k qualifies
  std::size_t best_k = 0;
};

struct CurvePoint {
  std::size_t k = 0;
  double auc = 0.0;
  double memory_remain = 0.0;
};

/// First point (ascending k) whose AUC reaches the threshold.
ThresholdResult threshold_from_points(double baseline_auc, std::span<const CurvePoint> points, double loss_fraction);

ThresholdResult threshold_experiment(const Experiment& exp, SelectorId selector, std::span<const std::size_t> ks,
                                     std::span<const std::uint64_t> seeds, double loss_fraction = 0.01);
ThresholdResult threshold_experiment(const Experiment& exp, std::string_view label, const RankingSource& ranking,
                                     std::span<const std::size_t> ks, std::span<const std::uint64_t> seeds,
                                     double loss_fraction = 0.01);

/// Fields taken in ranking order while cumulative embedding rows stay within
/// budget * total rows. Stops at the first violation unless skip_violations.
std::vector<std::size_t> budget_prefix(const Schema& schema, const ImportanceRanking& ranking, double budget,
                                       bool skip_violations = false);

struct BudgetPoint {
  double budget = 0.0;
  double mean_auc = 0.5;
  double mean_k = 0.0;
  double mean_memory = 0.0;
  std::vector<std::size_t> k_per_seed;
  std::vector<double> auc_per_seed;
  std::vector<double> memory_per_seed;
};

std::vector<BudgetPoint> budget_experiment(const Experiment& exp, SelectorId selector, std::span<const double> budgets,
                                           std::span<const std::uint64_t> seeds, bool skip_violations = false);
std::vector<BudgetPoint> budget_experiment(const Experiment& exp, std::string_view label, const RankingSource& ranking,
                                           std::span<const double> budgets, std::span<const std::uint64_t> seeds,
                                           bool skip_violations = false);

struct SimilarityMatrix {
  std::vector<std::string> names;
  std::vector<std::vector<double>> rho;

  /// Square CSV with selector names as header row and first column.
  std::string to_csv() const;
};

SimilarityMatrix similarity_study(std::span<const std::string> names, std::span<const ImportanceRanking> rankings);

}  // namespace fsbench
