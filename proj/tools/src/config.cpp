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

#include "fsbench/cli/config.hpp"

#include <charconv>
#include <set>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "fsbench/error.hpp"
#include "fsbench/io.hpp"

namespace fsbench::cli {
namespace {

// A config section that remembers which keys were read, so leftovers can be
// reported as typos.
class Section {
 public:
  Section(YAML::Node node, std::string name) : node_(std::move(node)), name_(std::move(name)) {
    if (node_ && !node_.IsNull() && !node_.IsMap()) {
      throw ConfigError(fmt::format("config: {} must be a mapping", name_.empty() ? "the file" : name_));
    }
  }

  bool has(const std::string& key) const { return node_ && node_.IsMap() && node_[key]; }

  template <typename T>
  void read(const std::string& key, T& out) {
    used_.insert(key);
    if (!has(key)) return;
    try {
      out = node_[key].as<T>();
    } catch (const YAML::Exception&) {
      throw ConfigError(fmt::format("config: {}.{} has the wrong type", name_, key));
    }
  }

  template <typename T>
  void read(const std::string& key, std::optional<T>& out) {
    T value{};
    if (!has(key)) {
      used_.insert(key);
      return;
    }
    read(key, value);
    out = value;
  }

  Section sub(const std::string& key) {
    used_.insert(key);
    return Section(has(key) ? node_[key] : YAML::Node(), name_.empty() ? key : name_ + "." + key);
  }

  void finish() const {
    if (!node_ || !node_.IsMap()) return;
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!used_.count(key)) {
        throw ConfigError(fmt::format("config: unknown key '{}'", name_.empty() ? key : name_ + "." + key));
      }
    }
  }

 private:
  YAML::Node node_;
  std::string name_;
  std::set<std::string> used_;
};

void apply_override(YAML::Node& root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError(fmt::format("override '{}' is not of the form section.key=value", assignment));
  }
  const auto path = split(assignment.substr(0, eq), '.');
  YAML::Node value;
  try {
    value = YAML::Load(assignment.substr(eq + 1));
  } catch (const YAML::Exception& e) {
    throw ConfigError(fmt::format("override '{}': {}", assignment, e.what()));
  }
  YAML::Node cur = root;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    if (!cur[path[i]] || !cur[path[i]].IsMap()) cur[path[i]] = YAML::Node(YAML::NodeType::Map);
    YAML::Node next = cur[path[i]];
    cur.reset(next);
  }
  cur[path.back()] = value;
}

LabelRule parse_label_rule(const std::string& text) {
  if (text == "binary") return LabelRule::kBinary;
  if (text == "gt3" || text == "greater_than_3") return LabelRule::kGreaterThan3;
  throw ConfigError(fmt::format("unknown label rule '{}' (expected binary or gt3)", text));
}

void read_boost(Section s, BoostParams& p) {
  s.read("n_trees", p.n_trees);
  s.read("max_depth", p.max_depth);
  s.read("shrinkage", p.shrinkage);
  s.read("reg_lambda", p.reg_lambda);
  s.read("gamma", p.gamma);
  s.read("min_samples_leaf", p.min_samples_leaf);
  s.finish();
}

void read_selectors(Section& s, SelectorParams& p) {
  {
    Section x = s.sub("lasso");
    x.read("lambda", p.lasso.lambda);
    x.read("epochs", p.lasso.epochs);
    x.read("batch_size", p.lasso.batch_size);
    x.read("learning_rate", p.lasso.learning_rate);
    x.read("max_values", p.lasso.max_values);
    x.finish();
  }
  read_boost(s.sub("gbdt"), p.gbdt);
  read_boost(s.sub("xgb"), p.xgb);
  {
    Section x = s.sub("rf");
    x.read("n_trees", p.rf.n_trees);
    x.read("max_depth", p.rf.max_depth);
    x.read("min_samples_leaf", p.rf.min_samples_leaf);
    x.read("max_features", p.rf.max_features);
    x.finish();
  }
  {
    Section x = s.sub("autofield");
    x.read("gate_learning_rate", p.autofield.gate_learning_rate);
    x.read("val_batch_size", p.autofield.val_batch_size);
    x.read("epochs", p.autofield_epochs);
    x.finish();
  }
  {
    Section x = s.sub("adafs");
    x.read("hidden", p.adafs.hidden);
    x.finish();
  }
  {
    Section x = s.sub("optfs");
    x.read("tau0", p.optfs.tau0);
    x.read("gamma", p.optfs.gamma);
    x.read("lambda_max", p.optfs.lambda_max);
    x.read("gate_learning_rate", p.optfs.gate_learning_rate);
    x.finish();
  }
  {
    Section x = s.sub("lpfs");
    x.read("eps0", p.lpfs.eps0);
    x.read("delta", p.lpfs.delta);
    x.read("theta0", p.lpfs.theta0);
    x.read("gate_learning_rate", p.lpfs.gate_learning_rate);
    x.finish();
  }
  {
    Section x = s.sub("permutation");
    x.read("n_repeats", p.permutation.n_repeats);
    x.finish();
  }
  {
    Section x = s.sub("shark");
    x.read("n_batches", p.shark.n_batches);
    x.read("batch_size", p.shark.batch_size);
    x.finish();
  }
  {
    Section x = s.sub("sfs");
    x.read("n_batches", p.sfs.n_batches);
    x.finish();
  }
}

template <typename T>
std::vector<T> parse_list(std::string_view text, const char* what) {
  std::vector<T> out;
  for (const auto& part : split(text, ',')) {
    const auto t = trim(part);
    if (t.empty()) continue;
    T v{};
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size()) {
      throw ConfigError(fmt::format("cannot parse '{}' in {} list '{}'", t, what, text));
    }
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError(fmt::format("empty {} list", what));
  return out;
}

}  // namespace

std::vector<std::size_t> parse_size_list(std::string_view text) { return parse_list<std::size_t>(text, "k"); }
std::vector<std::uint64_t> parse_seed_list(std::string_view text) { return parse_list<std::uint64_t>(text, "seed"); }
std::vector<double> parse_double_list(std::string_view text) { return parse_list<double>(text, "number"); }

Config load_config(const std::optional<std::filesystem::path>& path, std::span<const std::string> overrides) {
  YAML::Node root;
  try {
    if (path) {
      if (!std::filesystem::exists(*path)) throw MissingInputError(fmt::format("config file {} not found", path->string()));
      root = YAML::LoadFile(path->string());
    }
    if (!root || root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
    for (const auto& o : overrides) apply_override(root, o);
  } catch (const YAML::Exception& e) {
    throw ConfigError(fmt::format("config: {}", e.what()));
  }
  Section top(root, "");
  Config c;

  {
    Section s = top.sub("dataset");
    std::string preset;
    s.read("preset", preset);
    if (!preset.empty()) {
      const DatasetPreset& p = dataset_preset(preset);
      c.ingest.ratio = p.ratio;
      c.ingest.label_rule = p.label_rule;
      c.ingest.label_column = p.label_column;
      c.dataset_id = p.name;
    }
    std::string path_text;
    s.read("path", path_text);
    if (!path_text.empty()) c.csv = path_text;
    s.read("id", c.dataset_id);
    std::string ratio;
    s.read("split", ratio);
    if (!ratio.empty()) c.ingest.ratio = SplitRatio::parse(ratio);
    std::string rule;
    s.read("label_rule", rule);
    if (!rule.empty()) c.ingest.label_rule = parse_label_rule(rule);
    s.read("label_column", c.ingest.label_column);
    std::string delimiter;
    s.read("delimiter", delimiter);
    if (!delimiter.empty()) {
      if (delimiter == "\\t" || delimiter == "tab") delimiter = "\t";
      if (delimiter.size() != 1) throw ConfigError("config: dataset.delimiter must be a single character");
      c.ingest.delimiter = delimiter[0];
    }
    s.read("fields", c.ingest.field_columns);
    s.read("numeric", c.ingest.numeric_columns);
    s.read("numeric_bins", c.ingest.numeric_bins);
    s.read("min_count", c.ingest.min_count);
    s.read("max_vocab", c.ingest.max_vocab);
    s.read("seed", c.ingest.seed);
    s.finish();
  }
  if (top.has("synthetic")) {
    Section s = top.sub("synthetic");
    SyntheticSpec spec;
    s.read("n_fields", spec.n_fields);
    s.read("n_informative", spec.n_informative);
    s.read("vocab_sizes", spec.vocab_sizes);
    s.read("n_samples", spec.n_samples);
    s.read("noise_sigma", spec.noise_sigma);
    s.read("signal_scale", spec.signal_scale);
    std::string ratio;
    s.read("split", ratio);
    if (!ratio.empty()) spec.ratio = SplitRatio::parse(ratio);
    s.read("seed", spec.seed);
    s.finish();
    c.synthetic = spec;
  } else {
    top.sub("synthetic");
  }
  {
    Section s = top.sub("backbone");
    std::string kind;
    s.read("kind", kind);
    if (!kind.empty()) c.backbone.kind = parse_backbone(kind);
    s.read("embedding_dim", c.backbone.embedding_dim);
    s.read("mlp", c.backbone.mlp_dims);
    s.read("cross_layers", c.backbone.cross_layers);
    s.read("senet_reduction", c.backbone.senet_reduction);
    s.finish();
  }
  {
    Section s = top.sub("train");
    s.read("epochs", c.train.epochs);
    s.read("batch_size", c.train.batch_size);
    s.read("learning_rate", c.train.adam.learning_rate);
    s.read("beta1", c.train.adam.beta1);
    s.read("beta2", c.train.adam.beta2);
    s.read("epsilon", c.train.adam.epsilon);
    s.read("patience", c.train.patience);
    s.read("early_stop", c.train.early_stop);
    s.read("restore_best", c.train.restore_best);
    s.read("bias_from_prior", c.train.bias_from_prior);
    s.read("eval_batch_size", c.train.eval_batch_size);
    s.finish();
  }
  {
    Section s = top.sub("selector");
    s.read("name", c.selector);
    if (!c.selector.empty()) parse_selector(c.selector);
    std::string selection;
    s.read("selection", selection);
    if (!selection.empty()) c.selection = parse_selection(selection);
    read_selectors(s, c.selectors);
    s.finish();
  }
  {
    Section s = top.sub("protocol");
    s.read("selectors", c.selector_list);
    for (const auto& name : c.selector_list) parse_selector(name);
    s.read("k_grid", c.k_grid);
    s.read("budgets", c.budgets);
    s.read("loss_fraction", c.loss_fraction);
    s.read("seeds", c.seeds);
    s.read("skip_violations", c.skip_violations);
    s.finish();
  }
  {
    Section s = top.sub("output");
    std::string dir;
    s.read("dir", dir);
    if (!dir.empty()) c.out = dir;
    s.read("workers", c.workers);
    s.finish();
  }
  top.finish();

  c.backbone.validate();
  c.train.validate();
  if (c.seeds.empty()) throw ConfigError("config: protocol.seeds is empty");
  if (c.workers == 0) throw ConfigError("config: output.workers must be at least 1");
  return c;
}

Dataset load_dataset(const Config& config) {
  if (config.csv) return load_csv(*config.csv, config.ingest);
  if (config.synthetic) return generate_synthetic(*config.synthetic).dataset;
  throw ConfigError("config has neither dataset.path nor a synthetic block");
}

std::string dataset_label(const Config& config) {
  if (!config.dataset_id.empty()) return config.dataset_id;
  if (config.csv) return config.csv->stem().string();
  return "synthetic";
}

}  // namespace fsbench::cli
