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

#include "fsbench/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include <fmt/format.h>

#include "fsbench/error.hpp"
#include "fsbench/io.hpp"
#include "fsbench/rng.hpp"

namespace fsbench {
namespace {

constexpr const char* kRankingFile = "ranking.tsv";
constexpr const char* kMaskFile = "mask.bin";
constexpr const char* kCheckpointFile = "model.ckpt";

std::mutex& log_mutex() {
  static std::mutex mu;
  return mu;
}

void say(const Experiment& exp, const std::string& line) {
  if (!exp.log) return;
  std::lock_guard lock(log_mutex());
  exp.log(line);
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// Runs fn(i) for i in [0, n) on up to `workers` threads. The first exception
// (lowest index) is rethrown after every task has finished.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::jthread> pool;
  for (std::size_t t = 0; t < std::min(workers, n); ++t) pool.emplace_back(worker);
  pool.clear();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::string num(double v) { return format_double(v); }

std::string train_descriptor(const TrainConfig& t) {
  return fmt::format("epochs={};batch={};lr={};beta1={};beta2={};eps={};patience={};early_stop={};restore_best={};"
                     "prior_bias={}",
                     t.epochs, t.batch_size, num(t.adam.learning_rate), num(t.adam.beta1), num(t.adam.beta2),
                     num(t.adam.epsilon), t.patience, t.early_stop, t.restore_best, t.bias_from_prior);
}

std::string backbone_descriptor(const BackboneConfig& b) {
  std::vector<std::string> dims;
  for (std::size_t d : b.mlp_dims) dims.push_back(std::to_string(d));
  return fmt::format("dim={};mlp={};cross={};senet={}", b.embedding_dim, join(dims, "x"), b.cross_layers,
                     b.senet_reduction);
}

std::string boost_descriptor(const BoostParams& p) {
  return fmt::format("kind={};trees={};depth={};shrinkage={};lambda={};gamma={};min_leaf={}",
                     p.kind == BoostKind::kNewton ? "newton" : "gradient", p.n_trees, p.max_depth, num(p.shrinkage),
                     num(p.reg_lambda), num(p.gamma), p.min_samples_leaf);
}

std::string selector_descriptor(const SelectorParams& s, SelectorId id) {
  switch (id) {
    case SelectorId::kLasso:
      return fmt::format("lambda={};epochs={};batch={};lr={};max_values={}", num(s.lasso.lambda), s.lasso.epochs,
                         s.lasso.batch_size, num(s.lasso.learning_rate), s.lasso.max_values);
    case SelectorId::kGbdt:
      return boost_descriptor(s.gbdt);
    case SelectorId::kXgb:
      return boost_descriptor(s.xgb);
    case SelectorId::kRf:
      return fmt::format("trees={};depth={};min_leaf={};max_features={}", s.rf.n_trees, s.rf.max_depth,
                         s.rf.min_samples_leaf, s.rf.max_features);
    case SelectorId::kAutoField:
      return fmt::format("gate_lr={};val_batch={};epochs={}", num(s.autofield.gate_learning_rate),
                         s.autofield.val_batch_size, s.autofield_epochs);
    case SelectorId::kAdaFS:
      return fmt::format("hidden={}", s.adafs.hidden);
    case SelectorId::kOptFS:
      return fmt::format("tau0={};gamma={};lambda_max={};gate_lr={}", num(s.optfs.tau0), num(s.optfs.gamma),
                         num(s.optfs.lambda_max), num(s.optfs.gate_learning_rate));
    case SelectorId::kLpfs:
      return fmt::format("eps0={};delta={};theta0={};gate_lr={}", num(s.lpfs.eps0), num(s.lpfs.delta),
                         num(s.lpfs.theta0), num(s.lpfs.gate_learning_rate));
    case SelectorId::kPermutation:
      return fmt::format("repeats={}", s.permutation.n_repeats);
    case SelectorId::kShark:
      return fmt::format("batches={};batch={}", s.shark.n_batches, s.shark.batch_size);
    case SelectorId::kSfs:
      return fmt::format("batches={}", s.sfs.n_batches);
  }
  return {};
}

TrainConfig seeded(const TrainConfig& base, std::uint64_t seed) {
  TrainConfig cfg = base;
  cfg.seed = seed;
  return cfg;
}

std::string dataset_key(const Experiment& exp) {
  const std::string fp = dataset_fingerprint(exp.dataset());
  return exp.dataset_id.empty() ? fp : exp.dataset_id + "@" + fp;
}

RunSpec base_spec(const Experiment& exp, std::string selector, std::string stage, std::uint64_t seed) {
  RunSpec spec;
  spec.dataset = dataset_key(exp);
  spec.backbone = std::string(to_string(exp.backbone.kind));
  spec.selector = std::move(selector);
  spec.stage = std::move(stage);
  spec.seed = seed;
  spec.overrides["train"] = train_descriptor(exp.train);
  spec.overrides["model"] = backbone_descriptor(exp.backbone);
  return spec;
}

std::vector<std::size_t> all_fields(const Dataset& data) {
  std::vector<std::size_t> out(data.num_fields());
  std::iota(out.begin(), out.end(), std::size_t{0});
  return out;
}

std::vector<std::string> field_names(const Schema& schema, std::span<const std::size_t> fields) {
  std::vector<std::string> out;
  for (std::size_t f : fields) out.push_back(schema.at(f).name);
  return out;
}

void fill_metrics(RunRecord& rec, const TrainResult& result) {
  rec.test_auc = result.test.auc;
  rec.test_logloss = result.test.logloss;
  rec.val_auc = result.best_val_auc;
}

std::string artifact_path(const RunStore& store, const RunSpec& spec, const char* name) {
  if (!store.persistent()) return {};
  return (std::filesystem::path("runs") / spec.hash() / name).generic_string();
}

struct Trained {
  RunRecord record;
  std::optional<Model> model;
};

Trained train_baseline(const Experiment& exp, std::uint64_t seed) {
  const Dataset& data = exp.dataset();
  RunSpec spec = base_spec(exp, "none", "baseline", seed);
  spec.k = data.num_fields();
  say(exp, fmt::format("baseline seed={}", seed));
  Stopwatch clock;
  Model model = Model::build(exp.backbone, data.schema(), all_fields(data), seed);
  exp.runs().count_training();
  const TrainResult result = train(model, data, seeded(exp.train, seed));
  RunRecord rec;
  rec.spec = spec;
  fill_metrics(rec, result);
  rec.memory_remain = 1.0;
  rec.fields = field_names(data.schema(), all_fields(data));
  exp.runs().put_artifact(spec, kCheckpointFile, model.encode_checkpoint());
  rec.wall_seconds = clock.seconds();
  exp.runs().append(rec);
  return {rec, std::move(model)};
}

std::vector<std::size_t> canonical_fields(const Dataset& data, std::vector<std::size_t> fields) {
  std::sort(fields.begin(), fields.end());
  if (std::adjacent_find(fields.begin(), fields.end()) != fields.end()) {
    throw ConfigError("retrain field list contains duplicates");
  }
  if (fields.empty()) throw ConfigError("retrain needs at least one field");
  if (fields.back() >= data.num_fields()) {
    throw BoundsError(fmt::format("field index {} outside a {}-field schema", fields.back(), data.num_fields()));
  }
  return fields;
}

RunRecord retrain_fields(const Experiment& exp, std::string_view label, std::vector<std::size_t> fields,
                         std::uint64_t seed, SelectionType selection,
                         const std::map<std::string, std::string>& extra) {
  const Dataset& data = exp.dataset();
  fields = canonical_fields(data, std::move(fields));
  const auto names = field_names(data.schema(), fields);
  RunSpec spec = base_spec(exp, std::string(label), "retrain", seed);
  spec.selection = std::string(to_string(selection));
  spec.k = fields.size();
  spec.overrides["fields"] = join(names, ",");
  for (const auto& [key, value] : extra) spec.overrides[key] = value;
  if (auto cached = exp.runs().find(spec)) return *cached;

  say(exp, fmt::format("retrain {} k={} seed={} ({})", label, fields.size(), seed, to_string(selection)));
  Stopwatch clock;
  RunRecord rec;
  rec.spec = spec;
  rec.fields = names;
  exp.runs().count_training();
  const TrainConfig cfg = seeded(exp.train, seed);
  if (selection == SelectionType::kHard) {
    Model model = Model::build(exp.backbone, data.schema(), fields, seed);
    fill_metrics(rec, train(model, data, cfg));
    rec.memory_remain = memory_remain(data.schema(), fields);
  } else {
    // Soft selection keeps every embedding table and zeroes the dropped fields.
    Model model = Model::build(exp.backbone, data.schema(), all_fields(data), seed);
    std::vector<double> scale(data.num_fields(), 0.0);
    for (std::size_t f : fields) scale[f] = 1.0;
    FieldMaskHook mask(std::move(scale));
    fill_metrics(rec, train(model, data, cfg, &mask));
    rec.memory_remain = 1.0;
  }
  rec.wall_seconds = clock.seconds();
  exp.runs().append(rec);
  return rec;
}

std::string ranking_key(const ImportanceRanking& ranking) {
  return fmt::format("{:016x}", fnv1a64(ranking.to_text()));
}

ImportanceRanking compute_ranking(const Experiment& exp, SelectorId selector, std::uint64_t seed,
                                  std::optional<ValueMask>& mask) {
  const Dataset& data = exp.dataset();
  const SelectorParams& sp = exp.selectors;
  const TrainConfig cfg = seeded(exp.train, seed);
  switch (selector) {
    case SelectorId::kLasso: {
      LassoParams p = sp.lasso;
      p.seed = seed;
      return lasso_rank(data, p);
    }
    case SelectorId::kGbdt:
      return gbdt_rank(data, sp.gbdt, seed);
    case SelectorId::kXgb:
      return xgb_rank(data, sp.xgb, seed);
    case SelectorId::kRf:
      return rf_rank(data, sp.rf, seed);
    case SelectorId::kAutoField: {
      TrainConfig search = cfg;
      search.epochs = sp.autofield_epochs;
      return autofield_search(data, exp.backbone, search, sp.autofield);
    }
    case SelectorId::kOptFS: {
      OptFSResult r = optfs_search(data, exp.backbone, cfg, sp.optfs);
      mask = std::move(r.mask);
      return std::move(r.ranking);
    }
    case SelectorId::kLpfs: {
      SingleStageResult r = lpfs_run(data, exp.backbone, cfg, sp.lpfs);
      return std::move(*r.ranking);
    }
    case SelectorId::kPermutation: {
      const Model model = baseline_model(exp, seed);
      return permutation_rank(model, data, sp.permutation, seed).ranking;
    }
    case SelectorId::kShark: {
      Model model = baseline_model(exp, seed);
      return shark_rank(model, data, sp.shark, seed).ranking;
    }
    case SelectorId::kSfs:
      return sfs_rank(data, exp.backbone, cfg, sp.sfs).ranking;
    case SelectorId::kAdaFS:
      break;
  }
  throw ApplicabilityError(fmt::format("{} produces no field ranking", to_string(selector)));
}

struct RankingProvider {
  std::string label;
  std::function<ImportanceRanking(std::uint64_t)> ranking;
  std::map<std::string, std::string> tags;  // extra cache-key entries for retrains
};

RankingProvider selector_provider(const Experiment& exp, SelectorId selector) {
  return {std::string(to_string(selector)),
          [&exp, selector](std::uint64_t seed) { return run_search(exp, selector, seed).ranking; },
          {{"selector", selector_descriptor(exp.selectors, selector)}}};
}

RunRecord retrain_top_k(const Experiment& exp, const RankingProvider& provider, const ImportanceRanking& ranking,
                        std::size_t k, std::uint64_t seed, SelectionType selection) {
  const Dataset& data = exp.dataset();
  if (k == data.num_fields()) return run_baseline(exp, seed);
  auto extra = provider.tags;
  extra["ranking"] = ranking_key(ranking);
  return retrain_fields(exp, provider.label, ranking.top_indices(data.schema(), k), seed, selection, extra);
}

std::vector<std::size_t> checked_grid(const Experiment& exp, std::span<const std::size_t> ks) {
  std::vector<std::size_t> grid(ks.begin(), ks.end());
  std::sort(grid.begin(), grid.end());
  if (grid.empty()) throw ConfigError("k grid is empty");
  if (std::adjacent_find(grid.begin(), grid.end()) != grid.end()) throw ConfigError("k grid contains duplicates");
  if (grid.front() == 0 || grid.back() > exp.dataset().num_fields()) {
    throw BoundsError(
        fmt::format("k grid must lie in 1..{}, got {}..{}", exp.dataset().num_fields(), grid.front(), grid.back()));
  }
  return grid;
}

void check_seeds(std::span<const std::uint64_t> seeds) {
  if (seeds.empty()) throw ConfigError("at least one seed is required");
}

double mean_of(std::span<const double> v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double std_of(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

CurveResult curve_impl(const Experiment& exp, const RankingProvider& provider, std::span<const std::size_t> ks,
                       std::span<const std::uint64_t> seeds, SelectionType selection) {
  exp.validate();
  check_seeds(seeds);
  auto grid = checked_grid(exp, ks);
  const std::size_t total = exp.dataset().num_fields();
  // The |K| anchor comes from the baseline, so AUKC tiles the full range.
  if (grid.back() != total) grid.push_back(total);

  CurveResult out;
  out.label = provider.label;
  out.seeds.assign(seeds.begin(), seeds.end());
  out.per_seed.resize(seeds.size());
  std::vector<std::vector<RunRecord>> records(seeds.size());
  parallel_for(seeds.size(), exp.workers, [&](std::size_t i) {
    const ImportanceRanking ranking = provider.ranking(seeds[i]);
    KCurve curve{total, {}};
    for (std::size_t k : grid) {
      RunRecord rec = retrain_top_k(exp, provider, ranking, k, seeds[i], selection);
      curve.points.push_back({k, *rec.test_auc, *rec.test_logloss});
      records[i].push_back(std::move(rec));
    }
    out.per_seed[i] = std::move(curve);
  });

  out.mean.total_fields = total;
  for (std::size_t p = 0; p < grid.size(); ++p) {
    KPoint point{grid[p], 0.0, 0.0};
    for (const auto& c : out.per_seed) {
      point.auc += c.points[p].auc;
      point.logloss += c.points[p].logloss;
    }
    point.auc /= static_cast<double>(seeds.size());
    point.logloss /= static_cast<double>(seeds.size());
    out.mean.points.push_back(point);
  }
  for (const auto& c : out.per_seed) out.aukc_per_seed.push_back(curve_aukc(c));
  out.aukc_mean = mean_of(out.aukc_per_seed);
  for (auto& r : records) {
    for (auto& rec : r) out.records.push_back(std::move(rec));
  }
  return out;
}

ThresholdResult threshold_impl(const Experiment& exp, const RankingProvider& provider,
                               std::span<const std::size_t> ks, std::span<const std::uint64_t> seeds,
                               double loss_fraction) {
  exp.validate();
  check_seeds(seeds);
  const auto grid = checked_grid(exp, ks);
  std::vector<double> base(seeds.size());
  parallel_for(seeds.size(), exp.workers, [&](std::size_t i) { base[i] = *run_baseline(exp, seeds[i]).test_auc; });
  const double baseline = mean_of(base);

  std::vector<ImportanceRanking> rankings(seeds.size());
  parallel_for(seeds.size(), exp.workers, [&](std::size_t i) { rankings[i] = provider.ranking(seeds[i]); });

  const double threshold = performance_threshold(baseline, loss_fraction);
  std::vector<CurvePoint> points;
  // Walk the grid lazily: larger k are only trained while the threshold is unmet.
  for (std::size_t k : grid) {
    std::vector<double> aucs(seeds.size());
    std::vector<double> mems(seeds.size());
    parallel_for(seeds.size(), exp.workers, [&](std::size_t i) {
      const RunRecord rec = retrain_top_k(exp, provider, rankings[i], k, seeds[i], SelectionType::kHard);
      aucs[i] = *rec.test_auc;
      mems[i] = rec.memory_remain;
    });
    points.push_back({k, mean_of(aucs), mean_of(mems)});
    say(exp, fmt::format("threshold {} k={} auc={:.5f} target={:.5f}", provider.label, k, points.back().auc,
                         threshold));
    if (points.back().auc >= threshold) break;
  }
  return threshold_from_points(baseline, points, loss_fraction);
}

std::vector<BudgetPoint> budget_impl(const Experiment& exp, const RankingProvider& provider,
                                     std::span<const double> budgets, std::span<const std::uint64_t> seeds,
                                     bool skip_violations) {
  exp.validate();
  check_seeds(seeds);
  if (budgets.empty()) throw ConfigError("no memory budgets given");
  const Dataset& data = exp.dataset();
  std::vector<ImportanceRanking> rankings(seeds.size());
  parallel_for(seeds.size(), exp.workers, [&](std::size_t i) { rankings[i] = provider.ranking(seeds[i]); });

  std::vector<BudgetPoint> out;
  for (double budget : budgets) {
    BudgetPoint point;
    point.budget = budget;
    point.k_per_seed.resize(seeds.size());
    point.auc_per_seed.resize(seeds.size());
    point.memory_per_seed.resize(seeds.size());
    parallel_for(seeds.size(), exp.workers, [&](std::size_t i) {
      const auto fields = budget_prefix(data.schema(), rankings[i], budget, skip_violations);
      const auto other = budget_prefix(data.schema(), rankings[i], budget, !skip_violations);
      if (fields != other) {
        say(exp, fmt::format("budget {} seed={}: stop-at-first keeps {} fields, skip-and-continue keeps {}",
                             budget, seeds[i], skip_violations ? other.size() : fields.size(),
                             skip_violations ? fields.size() : other.size()));
      }
      point.k_per_seed[i] = fields.size();
      if (fields.empty()) {
        point.auc_per_seed[i] = 0.5;
        point.memory_per_seed[i] = 0.0;
        return;
      }
      auto extra = provider.tags;
      extra["ranking"] = ranking_key(rankings[i]);
      auto prefix = rankings[i].top_indices(data.schema(), fields.size());
      std::sort(prefix.begin(), prefix.end());
      auto sorted = fields;
      std::sort(sorted.begin(), sorted.end());
      // A skip-and-continue selection is not a top-k prefix; keep it off k-curves.
      if (prefix != sorted) extra["subset"] = "budget-skip";
      const RunRecord rec = fields.size() == data.num_fields()
                                ? run_baseline(exp, seeds[i])
                                : retrain_fields(exp, provider.label, fields, seeds[i], SelectionType::kHard, extra);
      point.auc_per_seed[i] = *rec.test_auc;
      point.memory_per_seed[i] = memory_remain(data.schema(), fields);
    });
    point.mean_auc = mean_of(point.auc_per_seed);
    point.mean_memory = mean_of(point.memory_per_seed);
    double ksum = 0.0;
    for (std::size_t k : point.k_per_seed) ksum += static_cast<double>(k);
    point.mean_k = ksum / static_cast<double>(seeds.size());
    out.push_back(std::move(point));
  }
  return out;
}

}  // namespace

std::string dataset_fingerprint(const Dataset& data) {
  std::uint64_t h = fnv1a64("fsbench-dataset");
  for (const auto& f : data.schema()) {
    h = fnv1a64(f.name, h);
    h = fnv1a64(std::to_string(f.vocab_size), h);
  }
  for (std::size_t f = 0; f < data.num_fields(); ++f) {
    const auto col = data.column(f);
    h = fnv1a64({reinterpret_cast<const char*>(col.data()), col.size_bytes()}, h);
  }
  const auto labels = data.labels();
  h = fnv1a64({reinterpret_cast<const char*>(labels.data()), labels.size_bytes()}, h);
  const auto splits = data.splits();
  h = fnv1a64({reinterpret_cast<const char*>(splits.data()), splits.size_bytes()}, h);
  return fmt::format("{:016x}", h);
}

const Dataset& Experiment::dataset() const {
  if (!data) throw ConfigError("experiment has no dataset");
  return *data;
}

RunStore& Experiment::runs() const {
  if (!store) throw ConfigError("experiment has no run store");
  return *store;
}

void Experiment::validate() const {
  require_splits(dataset());
  runs();
  backbone.validate();
  train.validate();
  if (workers == 0) throw ConfigError("workers must be at least 1");
}

RunRecord run_baseline(const Experiment& exp, std::uint64_t seed) {
  exp.validate();
  RunSpec spec = base_spec(exp, "none", "baseline", seed);
  spec.k = exp.dataset().num_fields();
  if (auto cached = exp.runs().find(spec)) return *cached;
  return train_baseline(exp, seed).record;
}

Model baseline_model(const Experiment& exp, std::uint64_t seed) {
  exp.validate();
  RunSpec spec = base_spec(exp, "none", "baseline", seed);
  spec.k = exp.dataset().num_fields();
  if (exp.runs().find(spec)) {
    if (auto bytes = exp.runs().get_artifact(spec, kCheckpointFile)) {
      return Model::decode_checkpoint(*bytes, exp.dataset().schema());
    }
  }
  return std::move(*train_baseline(exp, seed).model);
}

RunSpec search_spec(const Experiment& exp, SelectorId selector, std::uint64_t seed) {
  RunSpec spec = base_spec(exp, std::string(to_string(selector)), "search", seed);
  spec.selection = "any";
  spec.overrides["selector"] = selector_descriptor(exp.selectors, selector);
  return spec;
}

SearchOutcome run_search(const Experiment& exp, SelectorId selector, std::uint64_t seed) {
  exp.validate();
  if (!is_applicable(selector, Stage::kTwo, SelectionType::kHard) &&
      !is_applicable(selector, Stage::kTwo, SelectionType::kSoft)) {
    require_applicable(selector, Stage::kTwo, SelectionType::kHard);
  }
  RunStore& store = exp.runs();
  const RunSpec spec = search_spec(exp, selector, seed);
  if (auto cached = store.find(spec)) {
    auto text = store.get_artifact(spec, kRankingFile);
    auto mask = store.get_artifact(spec, kMaskFile);
    if (text && (selector != SelectorId::kOptFS || mask)) {
      SearchOutcome out{ImportanceRanking::parse(*text), std::nullopt, *cached};
      if (mask) out.mask = ValueMask::decode(*mask);
      return out;
    }
  }

  say(exp, fmt::format("search {} seed={}", to_string(selector), seed));
  Stopwatch clock;
  std::optional<ValueMask> mask;
  store.count_training();
  ImportanceRanking ranking = compute_ranking(exp, selector, seed, mask);
  RunRecord rec;
  rec.spec = spec;
  store.put_artifact(spec, kRankingFile, ranking.to_text());
  rec.ranking_path = artifact_path(store, spec, kRankingFile);
  if (mask) {
    store.put_artifact(spec, kMaskFile, mask->encode());
    rec.mask_path = artifact_path(store, spec, kMaskFile);
  }
  rec.wall_seconds = clock.seconds();
  store.append(rec);
  return {std::move(ranking), std::move(mask), std::move(rec)};
}

RunRecord run_fields_retrain(const Experiment& exp, std::string_view label, std::vector<std::size_t> fields,
                             std::uint64_t seed, SelectionType selection) {
  exp.validate();
  return retrain_fields(exp, label, std::move(fields), seed, selection, {});
}

RunRecord run_retrain(const Experiment& exp, SelectorId selector, std::uint64_t seed, std::size_t k,
                      SelectionType selection) {
  exp.validate();
  require_applicable(selector, Stage::kTwo, selection);
  if (k == 0 || k > exp.dataset().num_fields()) {
    throw BoundsError(fmt::format("k={} outside 1..{}", k, exp.dataset().num_fields()));
  }
  const RankingProvider provider = selector_provider(exp, selector);
  return retrain_top_k(exp, provider, provider.ranking(seed), k, seed, selection);
}

RunRecord run_value_retrain(const Experiment& exp, std::uint64_t seed) {
  exp.validate();
  const SearchOutcome search = run_search(exp, SelectorId::kOptFS, seed);
  const Dataset& data = exp.dataset();
  RunSpec spec = base_spec(exp, "optfs", "retrain", seed);
  spec.selection = "value";
  spec.overrides["mask"] = search.record.spec.hash();
  spec.overrides["selector"] = selector_descriptor(exp.selectors, SelectorId::kOptFS);
  if (auto cached = exp.runs().find(spec)) return *cached;

  say(exp, fmt::format("value-level retrain optfs seed={}", seed));
  Stopwatch clock;
  exp.runs().count_training();
  Model model = Model::build(exp.backbone, data.schema(), all_fields(data), seed);
  ValueMaskHook hook(model, *search.mask);
  RunRecord rec;
  rec.spec = spec;
  fill_metrics(rec, train(model, data, seeded(exp.train, seed), &hook));
  rec.memory_remain = memory_remain_rows(search.mask->kept_rows(), search.mask->total_rows());
  rec.fields = field_names(data.schema(), all_fields(data));
  rec.mask_path = search.record.mask_path;
  rec.wall_seconds = clock.seconds();
  exp.runs().append(rec);
  return rec;
}

double curve_aukc(const KCurve& curve) { return curve.complete() ? aukc_uniform(curve) : aukc_segmented(curve); }

CurveResult run_ranking_curve(const Experiment& exp, std::string_view label, const RankingSource& ranking,
                              std::span<const std::size_t> ks, std::span<const std::uint64_t> seeds,
                              SelectionType selection) {
  return curve_impl(exp, {std::string(label), ranking, {}}, ks, seeds, selection);
}

CurveResult run_two_stage(const Experiment& exp, SelectorId selector, std::span<const std::size_t> ks,
                          std::span<const std::uint64_t> seeds, SelectionType selection) {
  require_applicable(selector, Stage::kTwo, selection);
  return curve_impl(exp, selector_provider(exp, selector), ks, seeds, selection);
}

SingleStageSummary run_single_stage(const Experiment& exp, SelectorId selector, std::span<const std::uint64_t> seeds,
                                    SelectionType selection) {
  require_applicable(selector, Stage::kSingle, selection);
  exp.validate();
  check_seeds(seeds);
  const Dataset& data = exp.dataset();

  std::vector<RunRecord> joint(seeds.size());
  parallel_for(seeds.size(), exp.workers, [&](std::size_t i) {
    RunSpec spec = base_spec(exp, std::string(to_string(selector)), "single_stage", seeds[i]);
    spec.selection = std::string(to_string(selection));
    spec.overrides["selector"] = selector_descriptor(exp.selectors, selector);
    if (auto cached = exp.runs().find(spec)) {
      joint[i] = *cached;
      return;
    }
    say(exp, fmt::format("single-stage {} seed={}", to_string(selector), seeds[i]));
    Stopwatch clock;
    exp.runs().count_training();
    const TrainConfig cfg = seeded(exp.train, seeds[i]);
    RunRecord rec;
    rec.spec = spec;
    if (selector == SelectorId::kAdaFS) {
      const SingleStageResult r = adafs_train(data, exp.backbone, cfg, exp.selectors.adafs);
      fill_metrics(rec, r.train);
      rec.fields = field_names(data.schema(), all_fields(data));
      rec.memory_remain = 1.0;
    } else if (selector == SelectorId::kLpfs) {
      const SingleStageResult r = lpfs_run(data, exp.backbone, cfg, exp.selectors.lpfs);
      fill_metrics(rec, r.train);
      rec.fields = field_names(data.schema(), r.kept_fields);
      if (selection == SelectionType::kHard) {
        rec.test_auc = r.hard_test->auc;
        rec.test_logloss = r.hard_test->logloss;
        rec.memory_remain = memory_remain(data.schema(), r.kept_fields);
      }
    } else {
      throw ApplicabilityError(fmt::format("{} has no single-stage implementation", to_string(selector)));
    }
    rec.wall_seconds = clock.seconds();
    exp.runs().append(rec);
    joint[i] = std::move(rec);
  });

  auto summarize = [](const std::vector<RunRecord>& recs, SingleStageSummary& s) {
    std::vector<double> aucs;
    std::vector<double> losses;
    for (const auto& r : recs) {
      aucs.push_back(*r.test_auc);
      losses.push_back(*r.test_logloss);
    }
    s.mean_auc = mean_of(aucs);
    s.std_auc = std_of(aucs);
    s.mean_logloss = mean_of(losses);
  };

  SingleStageSummary out;
  out.records = joint;
  summarize(joint, out);
  out.best_mode = "single_stage";
  if (selector != SelectorId::kLpfs) return out;

  // LPFS also runs as a two-stage method: retrain on the fields it kept.
  std::vector<RunRecord> retrained(seeds.size());
  parallel_for(seeds.size(), exp.workers, [&](std::size_t i) {
    std::vector<std::size_t> kept;
    for (const auto& name : joint[i].fields) kept.push_back(field_index(data.schema(), name));
    if (kept.empty()) {
      RunRecord none;
      none.spec = joint[i].spec;
      none.spec.stage = "retrain";
      none.spec.k = 0;
      none.test_auc = 0.5;
      none.test_logloss = std::log(2.0);
      none.memory_remain = 0.0;
      retrained[i] = std::move(none);
      return;
    }
    retrained[i] = retrain_fields(exp, "lpfs", std::move(kept), seeds[i], SelectionType::kHard,
                                  {{"kept_by", joint[i].spec.hash()}});
  });
  SingleStageSummary alt;
  summarize(retrained, alt);
  out.records.insert(out.records.end(), retrained.begin(), retrained.end());
  if (alt.mean_auc > out.mean_auc) {
    out.mean_auc = alt.mean_auc;
    out.std_auc = alt.std_auc;
    out.mean_logloss = alt.mean_logloss;
    out.best_mode = "retrain";
  }
  return out;
}

double performance_threshold(double baseline_auc, double loss_fraction) {
  if (!(loss_fraction >= 0.0 && loss_fraction < 1.0)) {
    throw ConfigError(fmt::format("loss fraction must lie in [0, 1), got {}", loss_fraction));
  }
  if (!std::isfinite(baseline_auc)) throw NumericError("baseline AUC is not finite");
  return (1.0 - loss_fraction) * baseline_auc;
}

ThresholdResult threshold_from_points(double baseline_auc, std::span<const CurvePoint> points, double loss_fraction) {
  ThresholdResult out;
  out.baseline_auc = baseline_auc;
  out.threshold = performance_threshold(baseline_auc, loss_fraction);
  std::vector<CurvePoint> sorted(points.begin(), points.end());
  std::sort(sorted.begin(), sorted.end(), [](const CurvePoint& a, const CurvePoint& b) { return a.k < b.k; });
  bool first = true;
  for (const auto& p : sorted) {
    if (first || p.auc > out.best_auc) {
      out.best_auc = p.auc;
      out.best_k = p.k;
      first = false;
    }
    if (p.auc >= out.threshold) {
      out.reached = true;
      out.k = p.k;
      out.auc = p.auc;
      out.memory_remain = p.memory_remain;
      break;
    }
  }
  return out;
}

ThresholdResult threshold_experiment(const Experiment& exp, SelectorId selector, std::span<const std::size_t> ks,
                                     std::span<const std::uint64_t> seeds, double loss_fraction) {
  require_applicable(selector, Stage::kTwo, SelectionType::kHard);
  return threshold_impl(exp, selector_provider(exp, selector), ks, seeds, loss_fraction);
}

ThresholdResult threshold_experiment(const Experiment& exp, std::string_view label, const RankingSource& ranking,
                                     std::span<const std::size_t> ks, std::span<const std::uint64_t> seeds,
                                     double loss_fraction) {
  return threshold_impl(exp, {std::string(label), ranking, {}}, ks, seeds, loss_fraction);
}

std::vector<std::size_t> budget_prefix(const Schema& schema, const ImportanceRanking& ranking, double budget,
                                       bool skip_violations) {
  if (!(budget >= 0.0) || !std::isfinite(budget)) {
    throw ConfigError(fmt::format("memory budget must be a non-negative fraction, got {}", budget));
  }
  if (ranking.size() != schema.size()) {
    throw SchemaError(fmt::format("ranking covers {} fields, schema has {}", ranking.size(), schema.size()));
  }
  const double limit = budget * static_cast<double>(total_rows(schema));
  std::vector<std::size_t> out;
  std::size_t used = 0;
  for (const auto& entry : ranking.entries()) {
    const std::size_t f = field_index(schema, entry.field);
    const std::size_t rows = schema[f].vocab_size;
    if (static_cast<double>(used + rows) > limit) {
      if (!skip_violations) break;
      continue;
    }
    used += rows;
    out.push_back(f);
  }
  return out;
}

std::vector<BudgetPoint> budget_experiment(const Experiment& exp, SelectorId selector, std::span<const double> budgets,
                                           std::span<const std::uint64_t> seeds, bool skip_violations) {
  require_applicable(selector, Stage::kTwo, SelectionType::kHard);
  return budget_impl(exp, selector_provider(exp, selector), budgets, seeds, skip_violations);
}

std::vector<BudgetPoint> budget_experiment(const Experiment& exp, std::string_view label, const RankingSource& ranking,
                                           std::span<const double> budgets, std::span<const std::uint64_t> seeds,
                                           bool skip_violations) {
  return budget_impl(exp, {std::string(label), ranking, {}}, budgets, seeds, skip_violations);
}

std::string SimilarityMatrix::to_csv() const {
  std::string out = "selector";
  for (const auto& n : names) out += "," + n;
  out += "\n";
  for (std::size_t i = 0; i < names.size(); ++i) {
    out += names[i];
    for (double v : rho.at(i)) out += fmt::format(",{:.6f}", v);
    out += "\n";
  }
  return out;
}

SimilarityMatrix similarity_study(std::span<const std::string> names, std::span<const ImportanceRanking> rankings) {
  if (names.size() != rankings.size()) throw ConfigError("one name is needed per ranking");
  if (rankings.size() < 2) throw ConfigError("similarity needs at least two rankings");
  SimilarityMatrix m;
  m.names.assign(names.begin(), names.end());
  const std::size_t n = rankings.size();
  m.rho.assign(n, std::vector<double>(n, 1.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      m.rho[i][j] = m.rho[j][i] = spearman(rankings[i], rankings[j]);
    }
  }
  return m;
}

}  // namespace fsbench
