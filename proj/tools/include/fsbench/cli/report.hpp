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

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fsbench/harness.hpp"
#include "fsbench/metrics.hpp"
#include "fsbench/run_store.hpp"

namespace fsbench::cli {

/// Mean top-k curve of one (dataset, backbone, selector, selection) setting,
/// rebuilt from stored retrain and baseline records.
struct CurveGroup {
  std::string dataset;
  std::string backbone;
  std::string selector;
  std::string selection;
  std::vector<std::uint64_t> seeds;
  KCurve mean;
  std::optional<double> aukc;  // absent when no point at k = |K| exists

  std::string file_stem() const;
};

std::vector<CurveGroup> curves_from_records(std::span<const RunRecord> records);

/// Static line chart of one or more k-curves.
std::string kcurve_svg(std::string_view title, std::span<const std::pair<std::string, KCurve>> series);

/// File-name-safe version of an identifier.
std::string safe_name(std::string_view text);

struct ReportSummary {
  std::size_t records = 0;
  std::size_t curves = 0;
  std::vector<std::string> files;  // relative to the report directory
};

/// Writes every table the records support under `<results>/report`.
ReportSummary write_report(const std::filesystem::path& results);

/// Rows of the AUKC table, header `selector,backbone,aukc`.
std::string aukc_table(std::span<const CurveGroup> groups);

}  // namespace fsbench::cli
