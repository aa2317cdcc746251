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

#include "fsbench/cli/report.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <tuple>

#include <fmt/format.h>

#include "fsbench/error.hpp"
#include "fsbench/io.hpp"
#include "fsbench/ranking.hpp"

namespace fsbench::cli {
namespace {

// RunSpec entries that vary inside one curve and so are not part of its identity.
const std::set<std::string> kPerPointKeys = {"fields", "ranking"};

std::string setting_key(const RunSpec& spec) {
  std::string key = spec.dataset + "|" + spec.backbone;
  for (const auto& [k, v] : spec.overrides) {
    if (k == "train" || k == "model") key += "|" + k + "=" + v;
  }
  return key;
}

std::string group_key(const RunSpec& spec) {
  std::string key = setting_key(spec) + "|" + spec.selector + "|" + spec.selection;
  for (const auto& [k, v] : spec.overrides) {
    if (k != "train" && k != "model" && !kPerPointKeys.count(k)) key += "|" + k + "=" + v;
  }
  return key;
}

struct PointSum {
  double auc = 0.0;
  double logloss = 0.0;
  std::size_t n = 0;
};

std::string fixed(double v, int digits = 5) { return fmt::format("{:.{}f}", v, digits); }

void put(const std::filesystem::path& dir, const std::string& name, const std::string& text, ReportSummary& summary) {
  std::filesystem::create_directories((dir / name).parent_path());
  write_file_atomic(dir / name, text);
  summary.files.push_back(name);
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

// Concatenates the per-run CSV files a protocol command left in `dir`,
// keeping one header.
std::optional<std::string> gather_tables(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) return std::nullopt;
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.path().extension() == ".csv") files.push_back(e.path());
  }
  if (files.empty()) return std::nullopt;
  std::sort(files.begin(), files.end());
  std::string out;
  for (const auto& f : files) {
    const auto lines = split(read_file(f), '\n');
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (trim(lines[i]).empty()) continue;
      if (i == 0 && !out.empty()) continue;
      out += lines[i] + "\n";
    }
  }
  return out;
}

}  // namespace

std::string safe_name(std::string_view text) {
  std::string out;
  for (char c : text) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' || c == '_';
    out += ok ? c : '-';
  }
  return out.empty() ? "unnamed" : out;
}

std::string CurveGroup::file_stem() const {
  // The dataset id carries a fingerprint after '@'; keep only the readable part.
  const auto at = dataset.find('@');
  return safe_name(dataset.substr(0, at)) + "__" + safe_name(backbone) + "__" + safe_name(selector) + "__" +
         safe_name(selection);
}

std::vector<CurveGroup> curves_from_records(std::span<const RunRecord> records) {
  // Baseline AUC/logloss per (setting, seed), used as the k = |K| anchor.
  std::map<std::pair<std::string, std::uint64_t>, const RunRecord*> baselines;
  for (const auto& r : records) {
    if (r.spec.stage == "baseline" && r.test_auc && r.spec.k) baselines[{setting_key(r.spec), r.spec.seed}] = &r;
  }

  struct Acc {
    CurveGroup group;
    std::string setting;
    std::map<std::uint64_t, std::map<std::size_t, std::pair<double, double>>> per_seed;
    std::size_t total = 0;
  };
  std::map<std::string, Acc> groups;
  for (const auto& r : records) {
    if (r.spec.stage != "retrain" || !r.spec.overrides.count("ranking") || r.spec.overrides.count("subset") ||
        !r.test_auc || !r.spec.k) {
      continue;
    }
    Acc& acc = groups[group_key(r.spec)];
    acc.group.dataset = r.spec.dataset;
    acc.group.backbone = r.spec.backbone;
    acc.group.selector = r.spec.selector;
    acc.group.selection = r.spec.selection;
    acc.setting = setting_key(r.spec);
    acc.per_seed[r.spec.seed][*r.spec.k] = {*r.test_auc, r.test_logloss.value_or(0.0)};
  }

  std::vector<CurveGroup> out;
  for (auto& [key, acc] : groups) {
    std::map<std::size_t, PointSum> sums;
    std::size_t total = 0;
    for (auto& [seed, points] : acc.per_seed) {
      acc.group.seeds.push_back(seed);
      if (auto it = baselines.find({acc.setting, seed}); it != baselines.end()) {
        total = *it->second->spec.k;
        points.emplace(total, std::make_pair(*it->second->test_auc, it->second->test_logloss.value_or(0.0)));
      }
      for (const auto& [k, v] : points) {
        auto& s = sums[k];
        s.auc += v.first;
        s.logloss += v.second;
        ++s.n;
      }
    }
    if (total == 0) total = sums.rbegin()->first;
    acc.group.mean.total_fields = total;
    for (const auto& [k, s] : sums) {
      acc.group.mean.points.push_back({k, s.auc / static_cast<double>(s.n), s.logloss / static_cast<double>(s.n)});
    }
    if (!acc.group.mean.points.empty() && acc.group.mean.points.back().k == total) {
      acc.group.aukc = curve_aukc(acc.group.mean);
    }
    out.push_back(std::move(acc.group));
  }
  std::sort(out.begin(), out.end(), [](const CurveGroup& a, const CurveGroup& b) {
    return std::tie(a.dataset, a.backbone, a.selector, a.selection) <
           std::tie(b.dataset, b.backbone, b.selector, b.selection);
  });
  return out;
}

std::string aukc_table(std::span<const CurveGroup> groups) {
  std::string out = "selector,backbone,aukc\n";
  for (const auto& g : groups) {
    if (!g.aukc) continue;
    const std::string name = g.selection == "hard" ? g.selector : g.selector + "(" + g.selection + ")";
    out += fmt::format("{},{},{}\n", name, g.backbone, fixed(*g.aukc, 6));
  }
  return out;
}

std::string kcurve_svg(std::string_view title, std::span<const std::pair<std::string, KCurve>> series) {
  constexpr double kWidth = 640, kHeight = 400, kLeft = 60, kRight = 150, kTop = 40, kBottom = 50;
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
                                  "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#000000"};
  std::size_t kmax = 1;
  double lo = 0.5, hi = 0.5;
  for (const auto& [name, c] : series) {
    kmax = std::max(kmax, c.total_fields);
    for (const auto& p : c.points) {
      lo = std::min(lo, p.auc);
      hi = std::max(hi, p.auc);
    }
  }
  const double pad = std::max(0.005, (hi - lo) * 0.05);
  lo -= pad;
  hi += pad;
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto x = [&](double k) { return kLeft + pw * k / static_cast<double>(kmax); };
  auto y = [&](double a) { return kTop + ph * (1.0 - (a - lo) / (hi - lo)); };

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      "<text x=\"{2}\" y=\"22\" font-size=\"14\">{3}</text>\n",
      kWidth, kHeight, kLeft, title);
  svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"black\"/>\n", kLeft, kTop + ph,
                     kLeft + pw);
  svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n", kLeft, kTop,
                     kTop + ph);
  const std::size_t kstep = std::max<std::size_t>(1, (kmax + 11) / 12);
  for (std::size_t k = 0; k <= kmax; k += kstep) {
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{}</text>\n", x(k), kTop + ph + 16, k);
  }
  for (int i = 0; i <= 4; ++i) {
    const double a = lo + (hi - lo) * i / 4.0;
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">{:.3f}</text>\n", kLeft - 6, y(a) + 4, a);
    svg += fmt::format("<line x1=\"{}\" y1=\"{:.1f}\" x2=\"{}\" y2=\"{:.1f}\" stroke=\"#dddddd\"/>\n", kLeft, y(a),
                       kLeft + pw, y(a));
  }
  svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">k (selected fields)</text>\n",
                     kLeft + pw / 2, kHeight - 10);
  svg += fmt::format("<text x=\"14\" y=\"{:.1f}\" transform=\"rotate(-90 14 {:.1f})\" text-anchor=\"middle\">test AUC"
                     "</text>\n",
                     kTop + ph / 2, kTop + ph / 2);
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kColors[s % std::size(kColors)];
    std::string pts = fmt::format("{:.1f},{:.1f}", x(0), y(0.5));
    for (const auto& p : series[s].second.points) pts += fmt::format(" {:.1f},{:.1f}", x(p.k), y(p.auc));
    svg += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"2\" points=\"{}\"/>\n", color, pts);
    for (const auto& p : series[s].second.points) {
      svg += fmt::format("<circle cx=\"{:.1f}\" cy=\"{:.1f}\" r=\"3\" fill=\"{}\"/>\n", x(p.k), y(p.auc), color);
    }
    const double ly = kTop + 10 + 18.0 * s;
    svg += fmt::format("<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{2:.1f}\" y2=\"{1:.1f}\" stroke=\"{3}\" "
                       "stroke-width=\"2\"/>\n<text x=\"{4:.1f}\" y=\"{5:.1f}\">{6}</text>\n",
                       kLeft + pw + 10, ly, kLeft + pw + 30, color, kLeft + pw + 36, ly + 4, series[s].first);
  }
  svg += "</svg>\n";
  return svg;
}

ReportSummary write_report(const std::filesystem::path& results) {
  if (!std::filesystem::exists(results / RunStore::kRecordsFile)) {
    throw MissingInputError(fmt::format("no records in {}", results.string()));
  }
  RunStore store(results);
  const std::vector<RunRecord> records = store.records();
  if (records.empty()) throw MissingInputError(fmt::format("no records in {}", results.string()));

  const auto dir = results / "report";
  ReportSummary summary;
  summary.records = records.size();

  // k-curves and AUKC
  const auto groups = curves_from_records(records);
  summary.curves = groups.size();
  for (const auto& g : groups) {
    put(dir, "curves/" + g.file_stem() + ".csv", g.mean.to_csv(), summary);
    const std::pair<std::string, KCurve> series[] = {{g.selector, g.mean}};
    put(dir, "curves/" + g.file_stem() + ".svg",
        kcurve_svg(fmt::format("{} / {} ({})", g.selector, g.backbone, g.selection), series), summary);
  }
  if (!groups.empty()) put(dir, "aukc.csv", aukc_table(groups), summary);

  // Baselines, single-stage, and value-level runs, aggregated over seeds.
  struct Agg {
    std::vector<double> auc, logloss, memory;
    std::set<std::uint64_t> seeds;
  };
  std::map<std::tuple<std::string, std::string, std::string, std::string>, Agg> tables;
  for (const auto& r : records) {
    if (!r.test_auc) continue;
    std::string table;
    if (r.spec.stage == "baseline") {
      table = "baseline";
    } else if (r.spec.stage == "single_stage") {
      table = "single_stage";
    } else if (r.spec.stage == "retrain" && r.spec.overrides.count("kept_by")) {
      table = "single_stage_retrain";
    } else if (r.spec.stage == "retrain" && r.spec.selection == "value") {
      table = "value_level";
    } else {
      continue;
    }
    auto& a = tables[{table, r.spec.backbone, r.spec.selector, r.spec.selection}];
    a.auc.push_back(*r.test_auc);
    a.logloss.push_back(r.test_logloss.value_or(0.0));
    a.memory.push_back(r.memory_remain);
    a.seeds.insert(r.spec.seed);
  }
  if (!tables.empty()) {
    std::string csv = "table,backbone,selector,selection,seeds,mean_auc,std_auc,mean_logloss,memory_remain\n";
    for (const auto& [key, a] : tables) {
      csv += fmt::format("{},{},{},{},{},{},{},{},{}\n", std::get<0>(key), std::get<1>(key), std::get<2>(key),
                         std::get<3>(key), a.seeds.size(), fixed(mean_of(a.auc)), fixed(std_of(a.auc)),
                         fixed(mean_of(a.logloss)), format_percent(mean_of(a.memory)));
    }
    put(dir, "runs_summary.csv", csv, summary);
  }

  // Similarity between the rankings of every selector searched in one setting,
  // averaged over the seeds all of them share.
  std::map<std::string, std::map<std::string, std::map<std::uint64_t, std::string>>> searches;
  for (const auto& r : records) {
    if (r.spec.stage != "search" || r.ranking_path.empty()) continue;
    const auto path = results / r.ranking_path;
    if (!std::filesystem::exists(path)) continue;
    searches[setting_key(r.spec) + "|" + r.spec.backbone][r.spec.selector][r.spec.seed] = path.string();
  }
  std::size_t sim_index = 0;
  for (const auto& [setting, by_selector] : searches) {
    if (by_selector.size() < 2) continue;
    std::set<std::uint64_t> common;
    bool first = true;
    for (const auto& [sel, seeds] : by_selector) {
      std::set<std::uint64_t> s;
      for (const auto& [seed, p] : seeds) s.insert(seed);
      if (first) {
        common = s;
        first = false;
      } else {
        std::set<std::uint64_t> both;
        std::set_intersection(common.begin(), common.end(), s.begin(), s.end(), std::inserter(both, both.begin()));
        common = both;
      }
    }
    if (common.empty()) continue;
    std::vector<std::string> names;
    for (const auto& [sel, seeds] : by_selector) names.push_back(sel);
    SimilarityMatrix mean;
    for (std::uint64_t seed : common) {
      std::vector<ImportanceRanking> rankings;
      for (const auto& [sel, seeds] : by_selector) rankings.push_back(ImportanceRanking::load(seeds.at(seed)));
      const SimilarityMatrix m = similarity_study(names, rankings);
      if (mean.rho.empty()) {
        mean = m;
      } else {
        for (std::size_t i = 0; i < names.size(); ++i)
          for (std::size_t j = 0; j < names.size(); ++j) mean.rho[i][j] += m.rho[i][j];
      }
    }
    for (auto& row : mean.rho)
      for (double& v : row) v /= static_cast<double>(common.size());
    const std::string name = sim_index++ == 0 ? "similarity.csv" : fmt::format("similarity_{}.csv", sim_index);
    put(dir, name, mean.to_csv(), summary);
  }

  for (const char* protocol : {"threshold", "budget"}) {
    if (auto table = gather_tables(results / protocol)) put(dir, std::string(protocol) + ".csv", *table, summary);
  }
  return summary;
}

}  // namespace fsbench::cli
