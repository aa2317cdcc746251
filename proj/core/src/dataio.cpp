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

#include "fsbench/dataio.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "fsbench/error.hpp"
#include "fsbench/io.hpp"
#include "fsbench/rng.hpp"

namespace fsbench {

std::size_t field_index(const Schema& schema, std::string_view name) {
  for (std::size_t i = 0; i < schema.size(); ++i) {
    if (schema[i].name == name) return i;
  }
  throw SchemaError(fmt::format("unknown field '{}'", name));
}

std::size_t total_rows(const Schema& schema) {
  std::size_t total = 0;
  for (const auto& f : schema) total += f.vocab_size;
  return total;
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain:
      return "train";
    case Split::kVal:
      return "val";
    case Split::kTest:
      return "test";
  }
  return "?";
}

SplitRatio SplitRatio::parse(std::string_view text) {
  auto parts = split(text, ':');
  if (parts.size() != 3) throw ConfigError(fmt::format("split ratio '{}' must be a:b:c", text));
  SplitRatio r;
  double* slots[3] = {&r.train, &r.val, &r.test};
  for (int i = 0; i < 3; ++i) {
    auto piece = trim(parts[i]);
    auto res = std::from_chars(piece.data(), piece.data() + piece.size(), *slots[i]);
    if (res.ec != std::errc() || res.ptr != piece.data() + piece.size() || *slots[i] < 0.0) {
      throw ConfigError(fmt::format("bad split ratio component '{}'", piece));
    }
  }
  if (r.train + r.val + r.test <= 0.0) throw ConfigError("split ratio sums to zero");
  return r;
}

std::string SplitRatio::to_string() const {
  return format_double(train) + ":" + format_double(val) + ":" + format_double(test);
}

SplitCounts split_counts(std::size_t rows, const SplitRatio& ratio) {
  const double total = ratio.train + ratio.val + ratio.test;
  SplitCounts c;
  c.train = static_cast<std::size_t>(std::llround(rows * ratio.train / total));
  c.val = static_cast<std::size_t>(std::llround(rows * ratio.val / total));
  c.train = std::min(c.train, rows);
  c.val = std::min(c.val, rows - c.train);
  c.test = rows - c.train - c.val;
  return c;
}

std::vector<Split> assign_splits(std::size_t rows, const SplitRatio& ratio, std::uint64_t seed) {
  const SplitCounts counts = split_counts(rows, ratio);
  auto rng = Rng::derive(seed, "split");
  const auto order = rng.permutation(rows);
  std::vector<Split> tags(rows, Split::kTest);
  for (std::size_t pos = 0; pos < rows; ++pos) {
    Split s = Split::kTest;
    if (pos < counts.train) {
      s = Split::kTrain;
    } else if (pos < counts.train + counts.val) {
      s = Split::kVal;
    }
    tags[order[pos]] = s;
  }
  return tags;
}

Dataset::Dataset(Schema schema, std::vector<std::vector<std::uint32_t>> columns,
                 std::vector<std::uint8_t> labels, std::vector<Split> splits)
    : schema_(std::move(schema)),
      columns_(std::move(columns)),
      labels_(std::move(labels)),
      splits_(std::move(splits)) {
  if (columns_.size() != schema_.size()) {
    throw SchemaError(fmt::format("{} columns for {} schema fields", columns_.size(), schema_.size()));
  }
  std::set<std::string_view> names;
  for (const auto& f : schema_) {
    if (f.vocab_size < 1) throw SchemaError(fmt::format("field '{}' has vocab_size 0", f.name));
    if (!names.insert(f.name).second) throw SchemaError(fmt::format("duplicate field '{}'", f.name));
  }
  if (splits_.size() != labels_.size()) throw SchemaError("split tags do not match row count");
  for (std::size_t f = 0; f < columns_.size(); ++f) {
    if (columns_[f].size() != labels_.size()) {
      throw SchemaError(fmt::format("column '{}' has {} rows, expected {}", schema_[f].name,
                                    columns_[f].size(), labels_.size()));
    }
    for (std::uint32_t v : columns_[f]) {
      if (v >= schema_[f].vocab_size) {
        throw BoundsError(fmt::format("value {} out of range for field '{}' (vocab {})", v,
                                      schema_[f].name, schema_[f].vocab_size));
      }
    }
  }
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] > 1) throw LabelError(fmt::format("row {}: label {} is not 0/1", i, labels_[i]));
    split_rows_[static_cast<std::size_t>(splits_[i])].push_back(i);
  }
}

Dataset Dataset::project(std::span<const std::size_t> fields) const {
  Schema schema;
  std::vector<std::vector<std::uint32_t>> cols;
  for (std::size_t f : fields) {
    schema.push_back(schema_.at(f));
    cols.push_back(columns_.at(f));
  }
  return Dataset(std::move(schema), std::move(cols), labels_, splits_);
}

Dataset Dataset::with_column(std::size_t field, std::vector<std::uint32_t> values) const {
  Dataset copy = *this;
  if (values.size() != rows()) throw SchemaError("replacement column has wrong length");
  for (std::uint32_t v : values) {
    if (v >= schema_.at(field).vocab_size) throw BoundsError("replacement value out of range");
  }
  copy.columns_.at(field) = std::move(values);
  return copy;
}

Vocabulary::Vocabulary(std::vector<std::string> ordered_values) : values_(std::move(ordered_values)) {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    index_.emplace(values_[i], static_cast<std::uint32_t>(i + 1));
  }
}

std::uint32_t Vocabulary::lookup(std::string_view value) const {
  auto it = index_.find(std::string(value));
  return it == index_.end() ? 0u : it->second;
}

Vocabulary build_vocab(std::span<const std::string> column, std::size_t min_count,
                       std::size_t max_vocab) {
  if (min_count < 1) throw ConfigError("min_count must be >= 1");
  if (max_vocab < 1) throw ConfigError("max_vocab must be >= 1");
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& v : column) ++counts[v];
  std::vector<std::pair<std::string, std::size_t>> items;
  items.reserve(counts.size());
  for (auto& [value, count] : counts) {
    if (count >= min_count) items.emplace_back(value, count);
  }
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (items.size() > max_vocab) items.resize(max_vocab);
  std::vector<std::string> ordered;
  ordered.reserve(items.size());
  for (auto& item : items) ordered.push_back(std::move(item.first));
  return Vocabulary(std::move(ordered));
}

namespace {

const std::array<DatasetPreset, 4> kPresets = {{
    {"avazu", {7, 2, 1}, LabelRule::kBinary, "click"},
    {"criteo", {7, 2, 1}, LabelRule::kBinary, "label"},
    {"movielens", {7, 2, 1}, LabelRule::kGreaterThan3, "rating"},
    {"aliccp", {50, 25, 25}, LabelRule::kBinary, "click"},
}};

// Quantile bin edges from train values; NaN (unparseable) goes to OOV.
std::vector<double> quantile_edges(std::vector<double> values, std::size_t bins) {
  values.erase(std::remove_if(values.begin(), values.end(), [](double v) { return std::isnan(v); }),
               values.end());
  std::vector<double> edges;
  if (values.empty() || bins < 2) return edges;
  std::sort(values.begin(), values.end());
  for (std::size_t b = 1; b < bins; ++b) {
    const std::size_t pos = std::min(values.size() - 1, b * values.size() / bins);
    edges.push_back(values[pos]);
  }
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

double parse_number(std::string_view text) {
  text = trim(text);
  double v = std::nan("");
  if (text.empty()) return v;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) return std::nan("");
  return v;
}

}  // namespace

std::span<const DatasetPreset> dataset_presets() { return kPresets; }

const DatasetPreset& dataset_preset(std::string_view name) {
  for (const auto& p : kPresets) {
    if (p.name == name) return p;
  }
  throw ConfigError(fmt::format("unknown dataset preset '{}'", name));
}

std::optional<std::uint8_t> apply_label_rule(std::string_view raw, LabelRule rule) {
  const double v = parse_number(raw);
  if (std::isnan(v)) return std::nullopt;
  switch (rule) {
    case LabelRule::kBinary:
      if (v == 0.0) return 0;
      if (v == 1.0) return 1;
      return std::nullopt;
    case LabelRule::kGreaterThan3:
      return static_cast<std::uint8_t>(v > 3.0 ? 1 : 0);
  }
  return std::nullopt;
}

Dataset load_csv(const std::filesystem::path& path, const IngestConfig& config) {
  std::ifstream in(path);
  if (!in) throw MissingInputError("cannot open dataset: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("empty CSV (no header row): " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header = split(line, config.delimiter);
  for (auto& h : header) h = std::string(trim(h));

  auto find_col = [&](const std::string& name) -> std::size_t {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw SchemaError(fmt::format("missing column '{}'", name));
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t label_col = find_col(config.label_column);
  std::vector<std::string> field_names = config.field_columns;
  if (field_names.empty()) {
    for (const auto& h : header) {
      if (h != config.label_column) field_names.push_back(h);
    }
  }
  std::vector<std::size_t> field_cols;
  for (const auto& name : field_names) field_cols.push_back(find_col(name));
  for (const auto& name : config.numeric_columns) {
    if (std::find(field_names.begin(), field_names.end(), name) == field_names.end()) {
      throw SchemaError(fmt::format("numeric column '{}' is not a field column", name));
    }
  }

  std::vector<std::vector<std::string>> raw(field_cols.size());
  std::vector<std::uint8_t> labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split(line, config.delimiter);
    if (cells.size() != header.size()) {
      throw SchemaError(fmt::format("row {} has {} cells, header has {}", line_no, cells.size(),
                                    header.size()));
    }
    auto label = apply_label_rule(cells[label_col], config.label_rule);
    if (!label) {
      throw LabelError(fmt::format("row {}: label '{}' is not binary", line_no, cells[label_col]));
    }
    labels.push_back(*label);
    for (std::size_t f = 0; f < field_cols.size(); ++f) {
      raw[f].push_back(std::string(trim(cells[field_cols[f]])));
    }
  }

  const std::size_t rows = labels.size();
  auto splits = assign_splits(rows, config.ratio, config.seed);

  Schema schema;
  std::vector<std::vector<std::uint32_t>> columns;
  for (std::size_t f = 0; f < field_cols.size(); ++f) {
    const bool numeric = std::find(config.numeric_columns.begin(), config.numeric_columns.end(),
                                   field_names[f]) != config.numeric_columns.end();
    std::vector<std::string>& values = raw[f];
    if (numeric) {
      std::vector<double> parsed(rows);
      std::vector<double> train_values;
      for (std::size_t r = 0; r < rows; ++r) {
        parsed[r] = parse_number(values[r]);
        if (splits[r] == Split::kTrain) train_values.push_back(parsed[r]);
      }
      const auto edges = quantile_edges(std::move(train_values), config.numeric_bins);
      for (std::size_t r = 0; r < rows; ++r) {
        if (std::isnan(parsed[r])) {
          values[r].clear();
        } else {
          auto bin = std::upper_bound(edges.begin(), edges.end(), parsed[r]) - edges.begin();
          values[r] = "bin" + std::to_string(bin);
        }
      }
    }
    std::vector<std::string> train_column;
    for (std::size_t r = 0; r < rows; ++r) {
      if (splits[r] == Split::kTrain && !values[r].empty()) train_column.push_back(values[r]);
    }
    const Vocabulary vocab = build_vocab(train_column, config.min_count, config.max_vocab);
    std::vector<std::uint32_t> encoded(rows);
    for (std::size_t r = 0; r < rows; ++r) encoded[r] = vocab.lookup(values[r]);
    schema.push_back({field_names[f], vocab.vocab_size()});
    columns.push_back(std::move(encoded));
  }
  return Dataset(std::move(schema), std::move(columns), std::move(labels), std::move(splits));
}

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  if (spec.n_fields == 0) throw ConfigError("synthetic spec: n_fields must be positive");
  if (spec.n_informative > spec.n_fields) {
    throw ConfigError(fmt::format("synthetic spec: n_informative ({}) exceeds n_fields ({})",
                                  spec.n_informative, spec.n_fields));
  }
  if (spec.noise_sigma < 0.0) throw ConfigError("synthetic spec: noise_sigma must be >= 0");
  std::vector<std::size_t> vocab = spec.vocab_sizes;
  if (vocab.empty()) vocab.assign(spec.n_fields, 16);
  if (vocab.size() == 1) vocab.assign(spec.n_fields, vocab.front());
  if (vocab.size() != spec.n_fields) {
    throw ConfigError("synthetic spec: vocab_sizes must have one entry or one per field");
  }
  for (std::size_t v : vocab) {
    if (v < 1) throw ConfigError("synthetic spec: vocab sizes must be >= 1");
  }

  // Informative fields are scattered over the declaration order so that
  // declaration-order tie breaking cannot recover them by accident.
  auto layout_rng = Rng::derive(spec.seed, "synthetic-layout");
  const auto position = layout_rng.permutation(spec.n_fields);  // rank -> schema slot

  Schema schema(spec.n_fields);
  for (std::size_t f = 0; f < spec.n_fields; ++f) {
    schema[f] = {fmt::format("f{:02d}", f), vocab[f]};
  }

  // Informative rank i gets value weights ~ N(0, scale_i^2) with scales
  // decreasing linearly from signal_scale to 0.55 * signal_scale.
  auto weight_rng = Rng::derive(spec.seed, "synthetic-weights");
  std::vector<std::vector<double>> weights(spec.n_informative);
  for (std::size_t i = 0; i < spec.n_informative; ++i) {
    const double frac = spec.n_informative > 1 ? static_cast<double>(i) / (spec.n_informative - 1) : 0.0;
    const double scale = spec.signal_scale * (1.0 - 0.45 * frac);
    const std::size_t slot = position[i];
    weights[i].resize(vocab[slot]);
    for (auto& w : weights[i]) w = scale * weight_rng.normal();
  }

  auto value_rng = Rng::derive(spec.seed, "synthetic-values");
  auto label_rng = Rng::derive(spec.seed, "synthetic-labels");
  std::vector<std::vector<std::uint32_t>> columns(spec.n_fields, std::vector<std::uint32_t>(spec.n_samples));
  std::vector<std::uint8_t> labels(spec.n_samples);
  for (std::size_t r = 0; r < spec.n_samples; ++r) {
    for (std::size_t f = 0; f < spec.n_fields; ++f) {
      // Values 1..V-1 are drawn uniformly; a field with vocab 1 is all-OOV.
      columns[f][r] = vocab[f] > 1 ? static_cast<std::uint32_t>(1 + value_rng.below(vocab[f] - 1)) : 0u;
    }
    double logit = 0.0;
    for (std::size_t i = 0; i < spec.n_informative; ++i) {
      logit += weights[i][columns[position[i]][r]];
    }
    if (spec.noise_sigma > 0.0) logit += spec.noise_sigma * label_rng.normal();
    const double p = 1.0 / (1.0 + std::exp(-logit));
    labels[r] = label_rng.bernoulli(p) ? 1 : 0;
  }

  SyntheticData out;
  out.dataset = Dataset(std::move(schema), std::move(columns), std::move(labels),
                        assign_splits(spec.n_samples, spec.ratio, spec.seed));
  for (std::size_t i = 0; i < spec.n_fields; ++i) {
    out.truth_order.push_back(out.dataset.schema()[position[i]].name);
  }
  out.n_informative = spec.n_informative;
  return out;
}

std::map<std::uint32_t, std::size_t> field_value_counts(const Dataset& dataset, std::string_view field) {
  const std::size_t f = field_index(dataset.schema(), field);
  std::map<std::uint32_t, std::size_t> counts;
  const auto col = dataset.column(f);
  for (std::size_t r : dataset.rows_of(Split::kTrain)) ++counts[col[r]];
  return counts;
}

void write_csv(const Dataset& dataset, const std::filesystem::path& path) {
  std::string out = "label";
  for (const auto& f : dataset.schema()) out += "," + f.name;
  out += '\n';
  for (std::size_t r = 0; r < dataset.rows(); ++r) {
    out += static_cast<char>('0' + dataset.labels()[r]);
    for (std::size_t f = 0; f < dataset.num_fields(); ++f) {
      out += ',';
      out += std::to_string(dataset.column(f)[r]);
    }
    out += '\n';
  }
  write_file_atomic(path, out);
}

void write_truth_sidecar(const std::vector<std::string>& order, const std::filesystem::path& path) {
  std::string out;
  for (const auto& name : order) out += name + '\n';
  write_file_atomic(path, out);
}

std::vector<std::string> read_truth_sidecar(const std::filesystem::path& path) {
  std::vector<std::string> order;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    auto t = trim(line);
    if (!t.empty()) order.emplace_back(t);
  }
  return order;
}

}  // namespace fsbench
