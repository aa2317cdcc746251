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

#include "fsbench/run_store.hpp"

#include <fstream>

#include <fmt/format.h>

#include "fsbench/error.hpp"
#include "fsbench/io.hpp"
#include "fsbench/rng.hpp"

namespace fsbench {

using nlohmann::json;

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> read_optional(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

}  // namespace

json RunSpec::to_json() const {
  json j;
  j["dataset"] = dataset;
  j["backbone"] = backbone;
  j["selector"] = selector;
  j["stage"] = stage;
  j["selection"] = selection;
  j["k"] = k ? json(*k) : json(nullptr);
  j["seed"] = seed;
  j["overrides"] = overrides;
  return j;
}

RunSpec RunSpec::from_json(const json& j) {
  RunSpec s;
  s.dataset = j.at("dataset").get<std::string>();
  s.backbone = j.at("backbone").get<std::string>();
  s.selector = j.at("selector").get<std::string>();
  s.stage = j.at("stage").get<std::string>();
  s.selection = j.value("selection", "hard");
  if (j.contains("k") && !j.at("k").is_null()) s.k = j.at("k").get<std::size_t>();
  s.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("overrides")) s.overrides = j.at("overrides").get<std::map<std::string, std::string>>();
  return s;
}

std::string RunSpec::hash() const { return fmt::format("{:016x}", fnv1a64(to_json().dump())); }

json RunRecord::to_json() const {
  json j;
  j["spec"] = spec.to_json();
  j["hash"] = spec.hash();
  j["test_auc"] = optional_number(test_auc);
  j["test_logloss"] = optional_number(test_logloss);
  j["val_auc"] = optional_number(val_auc);
  j["memory_remain"] = memory_remain;
  j["wall_seconds"] = wall_seconds;
  j["fields"] = fields;
  j["ranking_path"] = ranking_path;
  j["mask_path"] = mask_path;
  return j;
}

RunRecord RunRecord::from_json(const json& j) {
  RunRecord r;
  r.spec = RunSpec::from_json(j.at("spec"));
  r.test_auc = read_optional(j, "test_auc");
  r.test_logloss = read_optional(j, "test_logloss");
  r.val_auc = read_optional(j, "val_auc");
  r.memory_remain = j.value("memory_remain", 1.0);
  r.wall_seconds = j.value("wall_seconds", 0.0);
  r.fields = j.value("fields", std::vector<std::string>{});
  r.ranking_path = j.value("ranking_path", "");
  r.mask_path = j.value("mask_path", "");
  return r;
}

RunStore::RunStore(std::filesystem::path root) : root_(std::move(root)) {
  if (persistent()) {
    std::error_code ec;
    std::filesystem::create_directories(root_ / "runs", ec);
    if (ec) throw MissingInputError(fmt::format("cannot create results directory {}: {}", root_.string(), ec.message()));
  }
}

std::filesystem::path RunStore::run_dir(const RunSpec& spec) const { return root_ / "runs" / spec.hash(); }

std::optional<RunRecord> RunStore::find(const RunSpec& spec) const {
  std::lock_guard lock(mu_);
  const std::string h = spec.hash();
  if (auto it = memory_.find(h); it != memory_.end()) return it->second;
  if (!persistent()) return std::nullopt;
  const auto path = root_ / "runs" / h / "record.json";
  if (!std::filesystem::exists(path)) return std::nullopt;
  try {
    return RunRecord::from_json(json::parse(read_file(path)));
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("corrupt run record {}: {}", path.string(), e.what()));
  }
}

void RunStore::append(const RunRecord& record) {
  std::lock_guard lock(mu_);
  const std::string h = record.spec.hash();
  if (!memory_.count(h)) order_.push_back(h);
  memory_[h] = record;
  if (!persistent()) return;
  const std::string line = record.to_json().dump();
  std::filesystem::create_directories(root_ / "runs" / h);
  write_file_atomic(root_ / "runs" / h / "record.json", line + "\n");
  std::ofstream out(root_ / kRecordsFile, std::ios::app | std::ios::binary);
  if (!out) throw MissingInputError(fmt::format("cannot append to {}", (root_ / kRecordsFile).string()));
  out << line << '\n';
}

std::vector<RunRecord> RunStore::records() const {
  std::lock_guard lock(mu_);
  if (!persistent()) {
    std::vector<RunRecord> out;
    for (const auto& h : order_) out.push_back(memory_.at(h));
    return out;
  }
  const auto path = root_ / kRecordsFile;
  if (!std::filesystem::exists(path)) return {};
  // Later lines for the same spec supersede earlier ones.
  std::map<std::string, std::size_t> index;
  std::vector<RunRecord> out;
  std::size_t line_no = 0;
  for (const auto& line : split(read_file(path), '\n')) {
    ++line_no;
    if (trim(line).empty()) continue;
    RunRecord r;
    try {
      r = RunRecord::from_json(json::parse(line));
    } catch (const json::exception& e) {
      throw ConfigError(fmt::format("{} line {}: {}", path.string(), line_no, e.what()));
    }
    const std::string h = r.spec.hash();
    if (auto it = index.find(h); it != index.end()) {
      out[it->second] = std::move(r);
    } else {
      index[h] = out.size();
      out.push_back(std::move(r));
    }
  }
  return out;
}

void RunStore::put_artifact(const RunSpec& spec, const std::string& name, const std::string& bytes) {
  std::lock_guard lock(mu_);
  if (!persistent()) {
    artifacts_[spec.hash() + "/" + name] = bytes;
    return;
  }
  std::filesystem::create_directories(run_dir(spec));
  write_file_atomic(run_dir(spec) / name, bytes);
}

std::optional<std::string> RunStore::get_artifact(const RunSpec& spec, const std::string& name) const {
  std::lock_guard lock(mu_);
  if (!persistent()) {
    auto it = artifacts_.find(spec.hash() + "/" + name);
    if (it == artifacts_.end()) return std::nullopt;
    return it->second;
  }
  const auto path = run_dir(spec) / name;
  if (!std::filesystem::exists(path)) return std::nullopt;
  return read_file(path);
}

}  // namespace fsbench
