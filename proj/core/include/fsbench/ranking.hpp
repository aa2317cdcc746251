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
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fsbench/dataio.hpp"

namespace fsbench {

struct RankEntry {
  std::string field;
  double score = 0.0;
};

/// One score per schema field, sorted by descending score. Equal scores keep
/// field declaration order.
class ImportanceRanking {
 public:
  static constexpr std::string_view kTiebreak = "declaration-order";

  ImportanceRanking() = default;

  /// `scores[f]` belongs to schema field f. Non-finite scores are rejected.
  static ImportanceRanking from_scores(const Schema& schema, std::span<const double> scores, std::string method,
                                       std::uint64_t seed);

  /// Reads the `field<TAB>score` text form. Lines starting with '#' carry
  /// optional `key=value` metadata.
  static ImportanceRanking parse(std::string_view text);
  static ImportanceRanking load(const std::filesystem::path& path);

  std::string to_text() const;
  void save(const std::filesystem::path& path) const;

  const std::vector<RankEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  const std::string& method() const noexcept { return method_; }
  std::uint64_t seed() const noexcept { return seed_; }

  /// Names of the k highest-ranked fields.
  std::vector<std::string> top(std::size_t k) const;
  /// Schema indices of the k highest-ranked fields, in ranking order.
  std::vector<std::size_t> top_indices(const Schema& schema, std::size_t k) const;
  double score_of(std::string_view field) const;

 private:
  std::vector<RankEntry> entries_;
  std::string method_;
  std::uint64_t seed_ = 0;
};

}  // namespace fsbench
