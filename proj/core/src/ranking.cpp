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

#include "fsbench/ranking.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "fsbench/error.hpp"
#include "fsbench/io.hpp"

namespace fsbench {

ImportanceRanking ImportanceRanking::from_scores(const Schema& schema, std::span<const double> scores,
                                                 std::string method, std::uint64_t seed) {
  if (scores.size() != schema.size()) {
    throw DimensionError(fmt::format("ranking: {} scores for {} fields", scores.size(), schema.size()));
  }
  for (std::size_t f = 0; f < scores.size(); ++f) {
    if (!std::isfinite(scores[f])) {
      throw NumericError(fmt::format("{}: non-finite importance for field '{}'", method, schema[f].name));
    }
  }
  std::vector<std::size_t> order(schema.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  ImportanceRanking r;
  r.method_ = std::move(method);
  r.seed_ = seed;
  for (std::size_t f : order) r.entries_.push_back({schema[f].name, scores[f]});
  return r;
}

ImportanceRanking ImportanceRanking::parse(std::string_view text) {
  ImportanceRanking r;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '#') {
      for (const auto& token : split(trim(line.substr(1)), ' ')) {
        const auto eq = token.find('=');
        if (eq == std::string::npos) continue;
        const auto key = token.substr(0, eq);
        const auto value = token.substr(eq + 1);
        if (key == "method") r.method_ = value;
        if (key == "seed") r.seed_ = std::stoull(value);
      }
      continue;
    }
    const auto parts = split(line, '\t');
    if (parts.size() != 2) throw ConfigError(fmt::format("ranking line {}: expected field<TAB>score", line_no));
    double score = 0.0;
    const auto s = trim(parts[1]);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), score);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(score)) {
      throw ConfigError(fmt::format("ranking line {}: bad score '{}'", line_no, s));
    }
    if (!seen.insert(parts[0]).second) throw ConfigError(fmt::format("ranking: duplicate field '{}'", parts[0]));
    if (!r.entries_.empty() && score > r.entries_.back().score) {
      throw ConfigError(fmt::format("ranking line {}: scores must be non-increasing", line_no));
    }
    r.entries_.push_back({parts[0], score});
  }
  return r;
}

ImportanceRanking ImportanceRanking::load(const std::filesystem::path& path) { return parse(read_file(path)); }

std::string ImportanceRanking::to_text() const {
  std::string out = fmt::format("# method={} seed={} tiebreak={}\n", method_, seed_, kTiebreak);
  for (const auto& e : entries_) out += fmt::format("{}\t{}\n", e.field, format_double(e.score));
  return out;
}

void ImportanceRanking::save(const std::filesystem::path& path) const { write_file_atomic(path, to_text()); }

std::vector<std::string> ImportanceRanking::top(std::size_t k) const {
  if (k > entries_.size()) throw BoundsError(fmt::format("top-{} requested from {} fields", k, entries_.size()));
  std::vector<std::string> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(entries_[i].field);
  return out;
}

std::vector<std::size_t> ImportanceRanking::top_indices(const Schema& schema, std::size_t k) const {
  std::vector<std::size_t> out;
  for (const auto& name : top(k)) out.push_back(field_index(schema, name));
  return out;
}

double ImportanceRanking::score_of(std::string_view field) const {
  for (const auto& e : entries_) {
    if (e.field == field) return e.score;
  }
  throw SchemaError(fmt::format("ranking has no field '{}'", field));
}

}  // namespace fsbench
