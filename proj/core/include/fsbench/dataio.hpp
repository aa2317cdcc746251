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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace fsbench {

/// One categorical feature field. Index 0 of every field is the OOV/rare bucket.
struct FieldSchema {
  std::string name;
  std::size_t vocab_size = 1;

  friend bool operator==(const FieldSchema&, const FieldSchema&) = default;
};

using Schema = std::vector<FieldSchema>;

/// Position of `name` in the schema; throws SchemaError when absent.
std::size_t field_index(const Schema& schema, std::string_view name);

/// Total embedding rows of the schema (sum of vocab sizes).
std::size_t total_rows(const Schema& schema);

enum class Split : std::uint8_t { kTrain = 0, kVal = 1, kTest = 2 };

std::string_view to_string(Split split);

struct SplitRatio {
  double train = 7.0;
  double val = 2.0;
  double test = 1.0;

  /// Parses "7:2:1" or "50:25:25".
  static SplitRatio parse(std::string_view text);
  std::string to_string() const;
};

/// Per-split row counts: train and val are rounded, test takes the remainder.
struct SplitCounts {
  std::size_t train = 0;
  std::size_t val = 0;
  std::size_t test = 0;
};
SplitCounts split_counts(std::size_t rows, const SplitRatio& ratio);

/// Deterministic split tags: a seeded permutation of row indices whose first
/// `train` positions are train, the next `val` are val, the rest test.
std::vector<Split> assign_splits(std::size_t rows, const SplitRatio& ratio, std::uint64_t seed);

/// Immutable columnar dataset. Column `f` holds the encoded value of field `f`
/// for every row.
class Dataset {
 public:
  Dataset() = default;
  Dataset(Schema schema, std::vector<std::vector<std::uint32_t>> columns,
          std::vector<std::uint8_t> labels, std::vector<Split> splits);

  const Schema& schema() const noexcept { return schema_; }
  std::size_t rows() const noexcept { return labels_.size(); }
  std::size_t num_fields() const noexcept { return schema_.size(); }

  std::span<const std::uint32_t> column(std::size_t field) const { return columns_.at(field); }
  std::span<const std::uint8_t> labels() const noexcept { return labels_; }
  std::span<const Split> splits() const noexcept { return splits_; }

  /// Row indices of one split, ascending.
  std::span<const std::size_t> rows_of(Split split) const {
    return split_rows_[static_cast<std::size_t>(split)];
  }

  /// Copy of this dataset restricted to the given fields (schema order kept as given).
  Dataset project(std::span<const std::size_t> fields) const;

  /// Copy with one column replaced; used by perturbation-based selectors.
  Dataset with_column(std::size_t field, std::vector<std::uint32_t> values) const;

 private:
  Schema schema_;
  std::vector<std::vector<std::uint32_t>> columns_;
  std::vector<std::uint8_t> labels_;
  std::vector<Split> splits_;
  std::vector<std::size_t> split_rows_[3];
};

/// Value -> index map produced by build_vocab. Unknown values map to 0.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> ordered_values);

  std::uint32_t lookup(std::string_view value) const;
  /// Distinct kept values plus the OOV bucket.
  std::size_t vocab_size() const noexcept { return values_.size() + 1; }
  /// Kept values, in index order (index i+1 holds values()[i]).
  const std::vector<std::string>& values() const noexcept { return values_; }

 private:
  std::vector<std::string> values_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

/// Indices 1..V by descending frequency, ties lexicographic; values below
/// `min_count` or beyond `max_vocab` map to 0.
Vocabulary build_vocab(std::span<const std::string> column, std::size_t min_count,
                       std::size_t max_vocab);

enum class LabelRule {
  kBinary,          // label column already holds 0/1
  kGreaterThan3,    // ratings: value > 3 is positive
};

struct IngestConfig {
  char delimiter = ',';
  std::string label_column = "label";
  std::vector<std::string> field_columns;    // empty: every non-label column
  std::vector<std::string> numeric_columns;  // bucketized into quantile bins
  std::size_t numeric_bins = 32;
  LabelRule label_rule = LabelRule::kBinary;
  std::size_t min_count = 1;
  std::size_t max_vocab = 1'000'000;
  SplitRatio ratio;
  std::uint64_t seed = 0;
};

/// Named presets for the four public datasets: split ratio and label rule only.
struct DatasetPreset {
  std::string name;
  SplitRatio ratio;
  LabelRule label_rule;
  std::string label_column;
};
const DatasetPreset& dataset_preset(std::string_view name);
std::span<const DatasetPreset> dataset_presets();

Dataset load_csv(const std::filesystem::path& path, const IngestConfig& config);

/// Label value after applying the rule; nullopt when the raw value is not binary.
std::optional<std::uint8_t> apply_label_rule(std::string_view raw, LabelRule rule);

struct SyntheticSpec {
  std::size_t n_fields = 12;
  std::size_t n_informative = 4;
  std::vector<std::size_t> vocab_sizes;  // one per field, or one value for all
  std::size_t n_samples = 50'000;
  double noise_sigma = 0.0;
  double signal_scale = 1.0;
  SplitRatio ratio;
  std::uint64_t seed = 0;
};

struct SyntheticData {
  Dataset dataset;
  /// Field names in true importance order: informative fields strongest first,
  /// then noise fields.
  std::vector<std::string> truth_order;
  std::size_t n_informative = 0;
};

SyntheticData generate_synthetic(const SyntheticSpec& spec);

/// Per-value counts over the train split only.
std::map<std::uint32_t, std::size_t> field_value_counts(const Dataset& dataset,
                                                         std::string_view field);

/// CSV in the same format load_csv reads (label column "label", one column per field).
void write_csv(const Dataset& dataset, const std::filesystem::path& path);
void write_truth_sidecar(const std::vector<std::string>& order, const std::filesystem::path& path);
std::vector<std::string> read_truth_sidecar(const std::filesystem::path& path);

}  // namespace fsbench
