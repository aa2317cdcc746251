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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fsbench/backbones.hpp"
#include "fsbench/dataio.hpp"
#include "fsbench/selectors.hpp"
#include "fsbench/trainer.hpp"

namespace fsbench::cli {

/// One experiment, read from a YAML file plus `section.key=value` overrides.
/// Unknown sections and keys are rejected.
struct Config {
  // dataset
  std::optional<std::filesystem::path> csv;
  std::string dataset_id;
  IngestConfig ingest;
  std::optional<SyntheticSpec> synthetic;

  BackboneConfig backbone;
  TrainConfig train;

  // selector
  std::string selector;
  std::optional<SelectionType> selection;
  SelectorParams selectors;

  // protocol
  std::vector<std::string> selector_list;
  std::vector<std::size_t> k_grid;  // empty: every k = 1..|K|
  std::vector<double> budgets{0.25, 0.50, 0.75};
  double loss_fraction = 0.01;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  bool skip_violations = false;

  // output
  std::filesystem::path out = "results";
  std::size_t workers = 1;
};

Config load_config(const std::optional<std::filesystem::path>& path, std::span<const std::string> overrides);

/// Parses "5,10,15" style lists.
std::vector<std::size_t> parse_size_list(std::string_view text);
std::vector<std::uint64_t> parse_seed_list(std::string_view text);
std::vector<double> parse_double_list(std::string_view text);

/// The dataset the config describes: a CSV file, else the synthetic block.
Dataset load_dataset(const Config& config);
std::string dataset_label(const Config& config);

}  // namespace fsbench::cli
