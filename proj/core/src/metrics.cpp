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

#include "fsbench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "fsbench/error.hpp"
#include "fsbench/io.hpp"

namespace fsbench {

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = r;
    i = j + 1;
  }
  return ranks;
}

double auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) {
    throw DimensionError(fmt::format("auc: {} scores for {} labels", scores.size(), labels.size()));
  }
  const auto ranks = average_ranks(scores);
  double pos_rank_sum = 0.0;
  std::size_t m = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i]) {
      pos_rank_sum += ranks[i];
      ++m;
    }
  }
  const std::size_t n = labels.size() - m;
  if (m == 0 || n == 0) throw NumericError("undefined metric: AUC needs both positive and negative samples");
  const double md = static_cast<double>(m);
  return (pos_rank_sum - md * (md + 1.0) / 2.0) / (md * static_cast<double>(n));
}

double logloss(std::span<const double> predictions, std::span<const std::uint8_t> labels) {
  if (predictions.size() != labels.size()) {
    throw DimensionError(fmt::format("logloss: {} predictions for {} labels", predictions.size(), labels.size()));
  }
  if (predictions.empty()) throw NumericError("undefined metric: logloss of zero samples");
  constexpr double kClamp = 1e-7;
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double p = std::clamp(predictions[i], kClamp, 1.0 - kClamp);
    total -= labels[i] ? std::log(p) : std::log(1.0 - p);
  }
  return total / static_cast<double>(labels.size());
}

void KCurve::validate() const {
  if (total_fields == 0) throw ConfigError("k-curve: total field count must be >= 1");
  std::size_t prev = 0;
  for (const auto& p : points) {
    if (p.k < 1 || p.k > total_fields) {
      throw BoundsError(fmt::format("k-curve: k={} outside [1, {}]", p.k, total_fields));
    }
    if (p.k <= prev) throw ConfigError(fmt::format("k-curve: k={} not strictly increasing", p.k));
    if (!(p.auc >= 0.0 && p.auc <= 1.0)) throw BoundsError(fmt::format("k-curve: AUC {} at k={}", p.auc, p.k));
    prev = p.k;
  }
}

bool KCurve::complete() const {
  if (points.size() != total_fields) return false;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].k != i + 1) return false;
  }
  return true;
}

std::string KCurve::to_csv() const {
  std::string out = "k,auc,logloss\n";
  for (const auto& p : points) out += fmt::format("{},{},{}\n", p.k, format_double(p.auc), format_double(p.logloss));
  return out;
}

KCurve KCurve::from_csv(std::string_view text, std::size_t total_fields) {
  KCurve c;
  c.total_fields = total_fields;
  const auto lines = split(text, '\n');
  if (lines.empty() || trim(lines[0]) != "k,auc,logloss") throw ConfigError("k-curve csv: expected header k,auc,logloss");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto line = trim(lines[i]);
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != 3) throw ConfigError(fmt::format("k-curve csv line {}: expected 3 cells", i + 1));
    try {
      c.points.push_back({std::stoul(cells[0]), std::stod(cells[1]), std::stod(cells[2])});
    } catch (const std::logic_error&) {
      throw ConfigError(fmt::format("k-curve csv line {}: bad number", i + 1));
    }
  }
  c.validate();
  return c;
}

std::vector<Segment> segments_of(const KCurve& curve) {
  curve.validate();
  std::vector<Segment> out;
  std::size_t left = 0;
  double auc_left = 0.5;
  for (const auto& p : curve.points) {
    out.push_back({left, p.k, auc_left, p.auc});
    left = p.k;
    auc_left = p.auc;
  }
  return out;
}

double aukc_uniform(const KCurve& curve) {
  curve.validate();
  if (!curve.complete()) {
    throw TilingError(fmt::format("uniform AUKC needs a point at every k=1..{}; use the segmented form for sparse grids",
                                  curve.total_fields));
  }
  double total = 0.0;
  double prev = 0.5;
  for (const auto& p : curve.points) {
    total += p.auc + prev - 1.0;
    prev = p.auc;
  }
  return total / static_cast<double>(curve.total_fields);
}

double aukc_segmented(std::span<const Segment> segments, std::size_t total_fields) {
  if (total_fields == 0) throw ConfigError("AUKC: total field count must be >= 1");
  if (segments.empty()) throw TilingError(fmt::format("no segments cover [0, {}]", total_fields));
  std::size_t expected_left = 0;
  double total = 0.0;
  for (const auto& s : segments) {
    if (s.left != expected_left) {
      throw TilingError(s.left > expected_left ? fmt::format("gap over k in [{}, {}]", expected_left, s.left)
                                               : fmt::format("overlap over k in [{}, {}]", s.left, expected_left));
    }
    if (s.right <= s.left) throw TilingError(fmt::format("empty segment [{}, {}]", s.left, s.right));
    if (s.left == 0 && s.auc_left != 0.5) throw TilingError("segment at k=0 must start from AUC 0.5");
    total += (s.auc_left + s.auc_right - 1.0) * static_cast<double>(s.right - s.left);
    expected_left = s.right;
  }
  if (expected_left != total_fields) {
    throw TilingError(expected_left < total_fields ? fmt::format("gap over k in [{}, {}]", expected_left, total_fields)
                                                   : fmt::format("overlap over k in [{}, {}]", total_fields, expected_left));
  }
  return total / static_cast<double>(total_fields);
}

double aukc_segmented(const KCurve& curve) {
  const auto segs = segments_of(curve);
  return aukc_segmented(segs, curve.total_fields);
}

double spearman(const ImportanceRanking& a, const ImportanceRanking& b) {
  std::set<std::string> fa, fb;
  for (const auto& e : a.entries()) fa.insert(e.field);
  for (const auto& e : b.entries()) fb.insert(e.field);
  if (fa != fb) {
    std::vector<std::string> diff;
    std::set_symmetric_difference(fa.begin(), fa.end(), fb.begin(), fb.end(), std::back_inserter(diff));
    std::string names;
    for (const auto& d : diff) names += (names.empty() ? "" : ", ") + d;
    throw SchemaError(fmt::format("rankings cover different fields: {}", names));
  }
  // Scores are negated so rank 1 is the most important field on both sides.
  std::vector<double> sa, sb;
  for (const auto& e : a.entries()) {
    sa.push_back(-e.score);
    sb.push_back(-b.score_of(e.field));
  }
  const auto ra = average_ranks(sa);
  const auto rb = average_ranks(sb);
  const double n = static_cast<double>(ra.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    cov += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (va == 0.0 || vb == 0.0) return 0.0;
  return std::clamp(cov / std::sqrt(va * vb), -1.0, 1.0);
}

double memory_remain(const Schema& schema, std::span<const std::size_t> selected) {
  std::set<std::size_t> unique;
  for (std::size_t f : selected) {
    if (f >= schema.size()) throw SchemaError(fmt::format("field index {} outside schema", f));
    unique.insert(f);
  }
  std::size_t kept = 0;
  for (std::size_t f : unique) kept += schema[f].vocab_size;
  return memory_remain_rows(kept, total_rows(schema));
}

double memory_remain(const Schema& schema, std::span<const std::string> selected) {
  std::vector<std::size_t> idx;
  for (const auto& name : selected) idx.push_back(field_index(schema, name));
  return memory_remain(schema, idx);
}

double memory_remain_rows(std::size_t kept_rows, std::size_t total_rows) {
  if (total_rows == 0) throw ConfigError("memory accounting: schema has no embedding rows");
  if (kept_rows > total_rows) throw BoundsError(fmt::format("kept rows {} exceed total {}", kept_rows, total_rows));
  return static_cast<double>(kept_rows) / static_cast<double>(total_rows);
}

std::string format_percent(double fraction) { return fmt::format("{:.5f}%", 100.0 * fraction); }

}  // namespace fsbench
