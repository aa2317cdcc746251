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
#include <string>
#include <string_view>
#include <vector>

#include "fsbench/dataio.hpp"
#include "fsbench/ranking.hpp"

namespace fsbench {

/// Average 1-based ranks in ascending order of `values`; ties share the mean rank.
std::vector<double> average_ranks(std::span<const double> values);

/// Area under the ROC curve from average ranks. Needs both classes present.
double auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

/// Mean binary cross entropy with predictions clamped to [1e-7, 1 - 1e-7].
double logloss(std::span<const double> predictions, std::span<const std::uint8_t> labels);

struct KPoint {
  std::size_t k = 0;
  double auc = 0.5;
  double logloss = 0.0;
};

/// Test metrics per selected-field count k. AUC at k = 0 is implicitly 0.5.
struct KCurve {
  std::size_t total_fields = 0;
  std::vector<KPoint> points;

  void validate() const;
  bool complete() const;  // a point at every k = 1..total_fields

  std::string to_csv() const;
  static KCurve from_csv(std::string_view text, std::size_t total_fields);
};

struct Segment {
  std::size_t left = 0;
  std::size_t right = 0;
  double auc_left = 0.5;
  double auc_right = 0.5;
};

/// Segments between consecutive measured k, starting from the (0, 0.5) anchor.
std::vector<Segment> segments_of(const KCurve& curve);

double aukc_uniform(const KCurve& curve);
double aukc_segmented(std::span<const Segment> segments, std::size_t total_fields);
double aukc_segmented(const KCurve& curve);

/// Rank correlation over the shared field set; tied scores get average ranks.
/// Returns 0 when either side has no rank variance.
double spearman(const ImportanceRanking& a, const ImportanceRanking& b);

/// Fraction of embedding rows kept by a field subset.
double memory_remain(const Schema& schema, std::span<const std::size_t> selected);
double memory_remain(const Schema& schema, std::span<const std::string> selected);
/// Fraction of embedding rows kept at value level.
double memory_remain_rows(std::size_t kept_rows, std::size_t total_rows);

/// "100.00000%" style: percent with five decimals.
std::string format_percent(double fraction);

}  // namespace fsbench
