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

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace fsbench {

/// Identity of one unit of work. Every field enters the cache key.
struct RunSpec {
  std::string dataset;   // dataset id including a content fingerprint
  std::string backbone;
  std::string selector;  // "none" for the no-selection baseline
  std::string stage;     // search | retrain | single_stage | baseline
  std::string selection = "hard";
  std::optional<std::size_t> k;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> overrides;  // hyperparameters and artifact hashes

  nlohmann::json to_json() const;
  static RunSpec from_json(const nlohmann::json& j);
  /// 16 hex digits of a hash over the canonical JSON form.
  std::string hash() const;
};

struct RunRecord {
  RunSpec spec;
  std::optional<double> test_auc;
  std::optional<double> test_logloss;
  std::optional<double> val_auc;
  double memory_remain = 1.0;
  double wall_seconds = 0.0;
  std::vector<std::string> fields;  // fields the evaluated model used
  std::string ranking_path;         // search runs, relative to the store root
  std::string mask_path;            // value-level searches

  nlohmann::json to_json() const;
  static RunRecord from_json(const nlohmann::json& j);
};

/// Append-only JSONL of RunRecords plus a `runs/<hash>/` directory per run.
/// An empty root keeps everything in memory.
class RunStore {
 public:
  explicit RunStore(std::filesystem::path root = {});

  bool persistent() const noexcept { return !root_.empty(); }
  const std::filesystem::path& root() const noexcept { return root_; }
  std::filesystem::path run_dir(const RunSpec& spec) const;

  std::optional<RunRecord> find(const RunSpec& spec) const;
  void append(const RunRecord& record);
  std::vector<RunRecord> records() const;

  /// Artifacts (rankings, masks) stored beside a run; in memory without a root.
  void put_artifact(const RunSpec& spec, const std::string& name, const std::string& bytes);
  std::optional<std::string> get_artifact(const RunSpec& spec, const std::string& name) const;

  std::size_t trainings() const noexcept { return trainings_.load(); }
  void count_training() { ++trainings_; }

  static constexpr const char* kRecordsFile = "records.jsonl";

 private:
  std::filesystem::path root_;
  mutable std::mutex mu_;
  std::map<std::string, RunRecord> memory_;
  std::vector<std::string> order_;
  std::map<std::string, std::string> artifacts_;
  std::atomic<std::size_t> trainings_{0};
};

}  // namespace fsbench
