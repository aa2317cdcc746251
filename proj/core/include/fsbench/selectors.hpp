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

#include <span>
#include <string_view>

#include "fsbench/gates.hpp"
#include "fsbench/sensitivity.hpp"
#include "fsbench/shallow.hpp"

namespace fsbench {

enum class SelectorId {
  kLasso,
  kGbdt,
  kRf,
  kXgb,
  kAutoField,
  kAdaFS,
  kOptFS,
  kLpfs,
  kPermutation,
  kShark,
  kSfs,
};

std::string_view to_string(SelectorId id);
SelectorId parse_selector(std::string_view name);
std::span<const SelectorId> all_selectors();

enum class Stage { kSingle, kTwo };
enum class SelectionType { kSoft, kHard };

std::string_view to_string(Stage stage);
std::string_view to_string(SelectionType type);
Stage parse_stage(std::string_view name);
SelectionType parse_selection(std::string_view name);

enum class Support { kNo, kYes, kAdapted };

/// One row of the selector applicability matrix.
struct Applicability {
  Support single_stage = Support::kNo;
  Support two_stage = Support::kNo;
  Support soft = Support::kNo;
  Support hard = Support::kNo;
};

Applicability applicability(SelectorId id);

/// A combination is allowed when both its stage and its selection type are
/// supported, directly or in adapted form.
bool is_applicable(SelectorId id, Stage stage, SelectionType type);
void require_applicable(SelectorId id, Stage stage, SelectionType type);

/// Whether the selector emits a field ranking (needed by every hard or
/// two-stage protocol).
bool produces_ranking(SelectorId id);

/// Hyperparameters for every selector, with desk-scale defaults.
struct SelectorParams {
  LassoParams lasso;
  BoostParams gbdt;
  BoostParams xgb{.kind = BoostKind::kNewton};
  ForestParams rf;
  AutoFieldParams autofield;
  std::size_t autofield_epochs = 1;
  AdaFSParams adafs;
  OptFSParams optfs;
  LpfsParams lpfs;
  PermutationParams permutation;
  SharkParams shark;
  SfsParams sfs;
};

}  // namespace fsbench
