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

#include "fsbench/cli/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <numeric>
#include <optional>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "fsbench/cli/config.hpp"
#include "fsbench/cli/report.hpp"
#include "fsbench/error.hpp"
#include "fsbench/harness.hpp"
#include "fsbench/io.hpp"

namespace fsbench::cli {
namespace {

struct CommonOptions {
  std::string config;
  std::vector<std::string> sets;
  std::string out;
  std::size_t workers = 0;
  std::string seeds;
  std::string backbone;
  std::vector<std::string> selectors;
  std::string selection;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool with_selector = true) {
  cmd->add_option("--config,-c", o.config, "Experiment config file (YAML)");
  cmd->add_option("--set", o.sets, "Override a config entry, e.g. train.epochs=3 (repeatable)");
  cmd->add_option("--out,-o", o.out, "Results directory");
  cmd->add_option("--workers,-j", o.workers, "Parallel seed workers");
  cmd->add_option("--seeds", o.seeds, "Comma-separated seeds");
  cmd->add_option("--backbone", o.backbone, "widedeep | deepfm | dcn | fibinet");
  if (with_selector) {
    cmd->add_option("--selector", o.selectors, "Selector name (repeatable where a command takes several)");
    cmd->add_option("--selection", o.selection, "hard | soft");
  }
}

Config resolve(const CommonOptions& o) {
  std::optional<std::filesystem::path> path;
  if (!o.config.empty()) path = o.config;
  Config c = load_config(path, o.sets);
  if (!o.out.empty()) c.out = o.out;
  if (o.workers) c.workers = o.workers;
  if (!o.seeds.empty()) c.seeds = parse_seed_list(o.seeds);
  if (!o.backbone.empty()) c.backbone.kind = parse_backbone(o.backbone);
  if (!o.selectors.empty()) {
    for (const auto& s : o.selectors) parse_selector(s);
    c.selector = o.selectors.front();
    c.selector_list = o.selectors;
  }
  if (!o.selection.empty()) c.selection = parse_selection(o.selection);
  return c;
}

// Loaded dataset, run store, and experiment for one command.
class Session {
 public:
  Session(Config config, std::ostream& err)
      : config_(std::move(config)), data_(load_dataset(config_)), store_(config_.out) {
    exp_.data = &data_;
    exp_.dataset_id = dataset_label(config_);
    exp_.backbone = config_.backbone;
    exp_.train = config_.train;
    exp_.selectors = config_.selectors;
    exp_.store = &store_;
    exp_.workers = config_.workers;
    exp_.log = [&err](std::string_view line) { err << line << '\n'; };
    exp_.validate();
  }
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  const Config& config() const { return config_; }
  const Dataset& data() const { return data_; }
  const Experiment& exp() const { return exp_; }
  RunStore& store() { return store_; }

  std::vector<std::size_t> k_grid() const {
    if (!config_.k_grid.empty()) return config_.k_grid;
    std::vector<std::size_t> all(data_.num_fields());
    std::iota(all.begin(), all.end(), std::size_t{1});
    return all;
  }

 private:
  Config config_;
  Dataset data_;
  RunStore store_;
  Experiment exp_;
};

std::string describe(const RunRecord& r) {
  std::string line = fmt::format("{} {} {}", r.spec.stage, r.spec.selector, r.spec.selection);
  if (r.spec.k) line += fmt::format(" k={}", *r.spec.k);
  line += fmt::format(" seed={}", r.spec.seed);
  if (r.test_auc) line += fmt::format(" auc={:.5f}", *r.test_auc);
  if (r.test_logloss) line += fmt::format(" logloss={:.5f}", *r.test_logloss);
  if (r.spec.stage != "search") line += fmt::format(" memory={}", format_percent(r.memory_remain));
  if (!r.ranking_path.empty()) line += " ranking=" + r.ranking_path;
  return line;
}

std::vector<SelectorId> selectors_of(const Config& c) {
  std::vector<std::string> names = c.selector_list;
  if (names.empty() && !c.selector.empty()) names.push_back(c.selector);
  if (names.empty()) throw ConfigError("no selector given (use --selector or selector.name)");
  std::vector<SelectorId> out;
  for (const auto& n : names) out.push_back(parse_selector(n));
  return out;
}

SelectionType selection_or(const Config& c, SelectionType fallback) { return c.selection.value_or(fallback); }

std::string dataset_stem(const Session& s) { return safe_name(dataset_label(s.config())); }

// --- commands ---------------------------------------------------------------

int cmd_synth(const Config& c, std::ostream& out) {
  if (!c.synthetic) throw ConfigError("synth needs a synthetic block in the config");
  const SyntheticData synth = generate_synthetic(*c.synthetic);
  std::filesystem::create_directories(c.out);
  const std::string stem = c.dataset_id.empty() ? "synthetic" : safe_name(c.dataset_id);
  const auto csv = c.out / (stem + ".csv");
  const auto truth = c.out / (stem + ".truth");
  write_csv(synth.dataset, csv);
  write_truth_sidecar(synth.truth_order, truth);
  out << fmt::format("synth {} rows={} fields={} informative={} truth={}\n", csv.string(), synth.dataset.rows(),
                     synth.dataset.num_fields(), synth.n_informative, truth.string());
  return 0;
}

struct RunOptions {
  std::string stage;
  std::size_t k = 0;
  std::string sweep;
};

int cmd_run(const Config& c, const RunOptions& o, std::ostream& out, std::ostream& err) {
  const std::string& stage = o.stage;
  if (stage == "baseline") {
    Session s(c, err);
    for (auto seed : c.seeds) out << describe(run_baseline(s.exp(), seed)) << '\n';
    return 0;
  }
  if (c.selector.empty()) throw ConfigError("run needs --selector");
  const SelectorId sel = parse_selector(c.selector);

  if (stage == "search") {
    if (!produces_ranking(sel)) require_applicable(sel, Stage::kTwo, SelectionType::kHard);
    Session s(c, err);
    for (auto seed : c.seeds) out << describe(run_search(s.exp(), sel, seed).record) << '\n';
    return 0;
  }
  if (stage == "retrain") {
    const SelectionType selection = selection_or(c, SelectionType::kHard);
    require_applicable(sel, Stage::kTwo, selection);
    std::vector<std::size_t> ks;
    if (!o.sweep.empty()) ks = parse_size_list(o.sweep);
    if (o.k) ks.push_back(o.k);
    if (ks.empty()) throw ConfigError("retrain needs --k or --sweep");
    Session s(c, err);
    for (auto seed : c.seeds) {
      const RunSpec search = search_spec(s.exp(), sel, seed);
      if (!s.store().find(search)) {
        throw MissingInputError(fmt::format("no {} ranking for seed {} in {}; run --stage search first",
                                            to_string(sel), seed, c.out.string()));
      }
    }
    for (auto seed : c.seeds) {
      for (auto k : ks) out << describe(run_retrain(s.exp(), sel, seed, k, selection)) << '\n';
    }
    return 0;
  }
  if (stage == "single_stage" || stage == "single") {
    const SelectionType selection = selection_or(c, SelectionType::kSoft);
    require_applicable(sel, Stage::kSingle, selection);
    Session s(c, err);
    const SingleStageSummary summary = run_single_stage(s.exp(), sel, c.seeds, selection);
    for (const auto& r : summary.records) out << describe(r) << '\n';
    out << fmt::format("single_stage {} {} mean_auc={:.5f} std_auc={:.5f} mean_logloss={:.5f} best_mode={}\n",
                       to_string(sel), to_string(selection), summary.mean_auc, summary.std_auc, summary.mean_logloss,
                       summary.best_mode);
    return 0;
  }
  if (stage == "value") {
    if (sel != SelectorId::kOptFS) {
      throw ApplicabilityError(fmt::format("value-level retraining needs a value mask; {} produces none",
                                           to_string(sel)));
    }
    Session s(c, err);
    for (auto seed : c.seeds) out << describe(run_value_retrain(s.exp(), seed)) << '\n';
    return 0;
  }
  throw ConfigError(fmt::format("unknown stage '{}' (search, retrain, single_stage, baseline, value)", stage));
}

void write_curve(const Session& s, const CurveResult& r, SelectionType selection) {
  const std::string stem = fmt::format("{}__{}__{}__{}", dataset_stem(s), to_string(s.config().backbone.kind),
                                       safe_name(r.label), to_string(selection));
  const auto dir = s.config().out / "curves";
  std::filesystem::create_directories(dir);
  write_file_atomic(dir / (stem + ".csv"), r.mean.to_csv());
  std::vector<std::pair<std::string, KCurve>> series{{r.label + " (mean)", r.mean}};
  for (std::size_t i = 0; i < r.per_seed.size(); ++i) {
    series.emplace_back(fmt::format("seed {}", r.seeds[i]), r.per_seed[i]);
  }
  write_file_atomic(dir / (stem + ".svg"),
                    kcurve_svg(fmt::format("{} / {}", r.label, to_string(s.config().backbone.kind)), series));
}

int cmd_sweep(const Config& c, std::ostream& out, std::ostream& err) {
  const auto selectors = selectors_of(c);
  const SelectionType selection = selection_or(c, SelectionType::kHard);
  for (auto sel : selectors) require_applicable(sel, Stage::kTwo, selection);
  Session s(c, err);
  const auto ks = s.k_grid();
  for (auto sel : selectors) {
    const CurveResult r = run_two_stage(s.exp(), sel, ks, c.seeds, selection);
    write_curve(s, r, selection);
    out << fmt::format("aukc {} {} {} mean={:.6f}", r.label, to_string(c.backbone.kind), to_string(selection),
                       r.aukc_mean);
    for (std::size_t i = 0; i < r.seeds.size(); ++i) out << fmt::format(" seed{}={:.6f}", r.seeds[i], r.aukc_per_seed[i]);
    out << '\n';
  }
  return 0;
}

int cmd_aukc(const Config& c, const std::vector<std::string>& files, std::size_t fields, std::ostream& out) {
  if (!files.empty()) {
    if (fields == 0) throw ConfigError("aukc on CSV files needs --fields (the schema size |K|)");
    for (const auto& f : files) {
      if (!std::filesystem::exists(f)) throw MissingInputError(fmt::format("curve file {} not found", f));
      const KCurve curve = KCurve::from_csv(read_file(f), fields);
      out << fmt::format("{},{:.6f},{}\n", f, curve_aukc(curve), curve.complete() ? "uniform" : "segmented");
    }
    return 0;
  }
  if (!std::filesystem::exists(c.out / RunStore::kRecordsFile)) {
    throw MissingInputError(fmt::format("no records in {}", c.out.string()));
  }
  const RunStore store(c.out);
  const auto records = store.records();
  const auto groups = curves_from_records(records);
  const std::string table = aukc_table(groups);
  write_file_atomic(c.out / "aukc.csv", table);
  out << table;
  return 0;
}

int cmd_similarity(const Config& c, const std::vector<std::string>& files, std::ostream& out, std::ostream& err) {
  if (!files.empty()) {
    std::vector<std::string> names;
    std::vector<ImportanceRanking> rankings;
    for (const auto& f : files) {
      rankings.push_back(ImportanceRanking::load(f));
      names.push_back(rankings.back().method().empty() ? std::filesystem::path(f).stem().string()
                                                        : rankings.back().method());
    }
    out << similarity_study(names, rankings).to_csv();
    return 0;
  }
  std::vector<SelectorId> selectors;
  if (c.selector_list.empty()) {
    for (auto id : all_selectors()) {
      if (produces_ranking(id) && is_applicable(id, Stage::kTwo, SelectionType::kHard)) selectors.push_back(id);
    }
  } else {
    selectors = selectors_of(c);
    for (auto sel : selectors) {
      if (!produces_ranking(sel)) require_applicable(sel, Stage::kTwo, SelectionType::kHard);
    }
  }
  Session s(c, err);
  std::vector<std::string> names;
  for (auto sel : selectors) names.emplace_back(to_string(sel));
  SimilarityMatrix mean;
  for (auto seed : c.seeds) {
    std::vector<ImportanceRanking> rankings;
    for (auto sel : selectors) rankings.push_back(run_search(s.exp(), sel, seed).ranking);
    const SimilarityMatrix m = similarity_study(names, rankings);
    if (mean.rho.empty()) {
      mean = m;
      continue;
    }
    for (std::size_t i = 0; i < names.size(); ++i)
      for (std::size_t j = 0; j < names.size(); ++j) mean.rho[i][j] += m.rho[i][j];
  }
  for (auto& row : mean.rho)
    for (double& v : row) v /= static_cast<double>(c.seeds.size());
  const std::string csv = mean.to_csv();
  write_file_atomic(c.out / fmt::format("similarity__{}__{}.csv", dataset_stem(s), to_string(c.backbone.kind)), csv);
  out << csv;
  return 0;
}

int cmd_threshold(const Config& c, std::optional<double> loss_fraction, std::ostream& out, std::ostream& err) {
  const auto selectors = selectors_of(c);
  for (auto sel : selectors) require_applicable(sel, Stage::kTwo, SelectionType::kHard);
  const double lf = loss_fraction.value_or(c.loss_fraction);
  Session s(c, err);
  const auto dir = c.out / "threshold";
  std::filesystem::create_directories(dir);
  for (auto sel : selectors) {
    const ThresholdResult r = threshold_experiment(s.exp(), sel, s.k_grid(), c.seeds, lf);
    const std::string backbone(to_string(c.backbone.kind));
    std::string csv = "dataset,backbone,selector,baseline_auc,threshold,reached,k,auc,memory_remain,best_k,best_auc\n";
    csv += fmt::format("{},{},{},{:.5f},{:.5f},{},{},{:.5f},{},{},{:.5f}\n", dataset_label(c), backbone, to_string(sel),
                       r.baseline_auc, r.threshold, r.reached ? "yes" : "no", r.k, r.auc,
                       format_percent(r.memory_remain), r.best_k, r.best_auc);
    write_file_atomic(dir / fmt::format("{}__{}__{}.csv", dataset_stem(s), backbone, to_string(sel)), csv);
    if (r.reached) {
      out << fmt::format("threshold {} {} baseline={:.5f} threshold={:.5f} k={} auc={:.5f} memory={}\n",
                         to_string(sel), backbone, r.baseline_auc, r.threshold, r.k, r.auc,
                         format_percent(r.memory_remain));
    } else {
      out << fmt::format("threshold {} {} baseline={:.5f} threshold={:.5f} not reached; best k={} auc={:.5f}\n",
                         to_string(sel), backbone, r.baseline_auc, r.threshold, r.best_k, r.best_auc);
    }
  }
  return 0;
}

int cmd_budget(Config c, const std::string& budgets, bool skip, std::ostream& out, std::ostream& err) {
  const auto selectors = selectors_of(c);
  for (auto sel : selectors) require_applicable(sel, Stage::kTwo, SelectionType::kHard);
  if (!budgets.empty()) c.budgets = parse_double_list(budgets);
  if (skip) c.skip_violations = true;
  Session s(c, err);
  const auto dir = c.out / "budget";
  std::filesystem::create_directories(dir);
  for (auto sel : selectors) {
    const auto points = budget_experiment(s.exp(), sel, c.budgets, c.seeds, c.skip_violations);
    const std::string backbone(to_string(c.backbone.kind));
    std::string csv = "dataset,backbone,selector,budget,mean_auc,mean_k,memory_remain\n";
    for (const auto& p : points) {
      csv += fmt::format("{},{},{},{},{:.5f},{:.2f},{}\n", dataset_label(c), backbone, to_string(sel),
                         format_double(p.budget), p.mean_auc, p.mean_k, format_percent(p.mean_memory));
      out << fmt::format("budget {} {} budget={} auc={:.5f} k={:.2f} memory={}\n", to_string(sel), backbone,
                         format_percent(p.budget), p.mean_auc, p.mean_k, format_percent(p.mean_memory));
    }
    write_file_atomic(dir / fmt::format("{}__{}__{}.csv", dataset_stem(s), backbone, to_string(sel)), csv);
  }
  return 0;
}

int cmd_report(const std::filesystem::path& dir, std::ostream& out) {
  const ReportSummary summary = write_report(dir);
  out << fmt::format("report {} records={} curves={} files={}\n", (dir / "report").string(), summary.records,
                     summary.curves, summary.files.size());
  return 0;
}

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"fsbench: feature-selection benchmark for CTR models"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every command");

  CommonOptions synth_o, run_o, sweep_o, aukc_o, sim_o, thr_o, bud_o;
  auto* synth = app.add_subcommand("synth", "Write a planted synthetic dataset and its ground-truth sidecar");
  add_common(synth, synth_o, false);

  auto* run_cmd = app.add_subcommand("run", "Run one stage of a protocol for every seed");
  add_common(run_cmd, run_o);
  RunOptions ro;
  run_cmd->add_option("--stage", ro.stage, "search | retrain | single_stage | baseline | value")->required();
  run_cmd->add_option("--k", ro.k, "Number of top fields to retrain on");
  run_cmd->add_option("--sweep", ro.sweep, "Comma-separated k values to retrain on");

  auto* sweep = app.add_subcommand("sweep", "Two-stage search and top-k retrains over the k grid");
  add_common(sweep, sweep_o);

  auto* aukc = app.add_subcommand("aukc", "AUKC of k-curve CSV files, or of the curves in the results directory");
  add_common(aukc, aukc_o, false);
  std::vector<std::string> curve_files;
  std::size_t aukc_fields = 0;
  aukc->add_option("curves", curve_files, "KCurve CSV files");
  aukc->add_option("--fields", aukc_fields, "Schema size |K| for CSV inputs");

  auto* sim = app.add_subcommand("similarity", "Spearman similarity between selector rankings");
  add_common(sim, sim_o);
  std::vector<std::string> ranking_files;
  sim->add_option("rankings", ranking_files, "Ranking files; without them, selectors are searched");

  auto* thr = app.add_subcommand("threshold", "Smallest k within the allowed AUC loss of the baseline");
  add_common(thr, thr_o);
  std::optional<double> loss_fraction;
  thr->add_option("--loss-fraction", loss_fraction, "Allowed relative AUC loss (default 0.01)");

  auto* bud = app.add_subcommand("budget", "Best prefix of the ranking under embedding-memory budgets");
  add_common(bud, bud_o);
  std::string budgets;
  bool skip = false;
  bud->add_option("--budgets", budgets, "Comma-separated fractions, e.g. 0.25,0.5,0.75");
  bud->add_flag("--skip-violations", skip, "Skip fields that exceed the budget instead of stopping");

  auto* report = app.add_subcommand("report", "Tables and charts from a results directory");
  std::string report_dir;
  report->add_option("dir", report_dir, "Results directory (default: results)");
  report->add_option("--out,-o", report_dir, "Results directory");

  std::vector<std::string> argv_storage{"fsbench"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_storage) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : exit_code_for(ErrorKind::kConfig);
  }

  try {
    if (synth->parsed()) return cmd_synth(resolve(synth_o), out);
    if (run_cmd->parsed()) return cmd_run(resolve(run_o), ro, out, err);
    if (sweep->parsed()) return cmd_sweep(resolve(sweep_o), out, err);
    if (aukc->parsed()) return cmd_aukc(resolve(aukc_o), curve_files, aukc_fields, out);
    if (sim->parsed()) return cmd_similarity(resolve(sim_o), ranking_files, out, err);
    if (thr->parsed()) return cmd_threshold(resolve(thr_o), loss_fraction, out, err);
    if (bud->parsed()) return cmd_budget(resolve(bud_o), budgets, skip, out, err);
    if (report->parsed()) return cmd_report(report_dir.empty() ? "results" : report_dir, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(ErrorKind::kMissingInput);
  }
  return 0;
}

}  // namespace fsbench::cli
