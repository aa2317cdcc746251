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

#include "fsbench/selectors.hpp"

#include <array>

#include <fmt/format.h>

#include "fsbench/error.hpp"

namespace fsbench {

namespace {

constexpr std::array kAll = {
    SelectorId::kLasso,       SelectorId::kGbdt,  SelectorId::kRf,    SelectorId::kXgb,
    SelectorId::kAutoField,   SelectorId::kAdaFS, SelectorId::kOptFS, SelectorId::kLpfs,
    SelectorId::kPermutation, SelectorId::kShark, SelectorId::kSfs,
};

bool supported(Support s) { return s != Support::kNo; }

}  // namespace

std::string_view to_string(SelectorId id) {
  switch (id) {
    case SelectorId::kLasso:
      return "lasso";
    case SelectorId::kGbdt:
      return "gbdt";
    case SelectorId::kRf:
      return "rf";
    case SelectorId::kXgb:
      return "xgb";
    case SelectorId::kAutoField:
      return "autofield";
    case SelectorId::kAdaFS:
      return "adafs";
    case SelectorId::kOptFS:
      return "optfs";
    case SelectorId::kLpfs:
      return "lpfs";
    case SelectorId::kPermutation:
      return "permutation";
    case SelectorId::kShark:
      return "shark";
    case SelectorId::kSfs:
      return "sfs";
  }
  return "?";
}

SelectorId parse_selector(std::string_view name) {
  for (SelectorId id : kAll) {
    if (to_string(id) == name) return id;
  }
  throw ConfigError(fmt::format("unknown selector '{}'", name));
}

std::span<const SelectorId> all_selectors() { return kAll; }

std::string_view to_string(Stage stage) { return stage == Stage::kSingle ? "single" : "two"; }

std::string_view to_string(SelectionType type) { return type == SelectionType::kSoft ? "soft" : "hard"; }

Stage parse_stage(std::string_view name) {
  if (name == "single") return Stage::kSingle;
  if (name == "two") return Stage::kTwo;
  throw ConfigError(fmt::format("unknown stage kind '{}' (single, two)", name));
}

SelectionType parse_selection(std::string_view name) {
  if (name == "soft") return SelectionType::kSoft;
  if (name == "hard") return SelectionType::kHard;
  throw ConfigError(fmt::format("unknown selection type '{}' (soft, hard)", name));
}

Applicability applicability(SelectorId id) {
  using enum Support;
  switch (id) {
    case SelectorId::kLasso:
    case SelectorId::kGbdt:
    case SelectorId::kRf:
    case SelectorId::kXgb:
    case SelectorId::kAutoField:
    case SelectorId::kPermutation:
    case SelectorId::kShark:
    case SelectorId::kSfs:
      return {kNo, kYes, kNo, kYes};
    case SelectorId::kAdaFS:
      return {kYes, kNo, kYes, kNo};
    case SelectorId::kOptFS:
      return {kNo, kYes, kYes, kAdapted};
    case SelectorId::kLpfs:
      return {kYes, kAdapted, kYes, kAdapted};
  }
  return {};
}

bool is_applicable(SelectorId id, Stage stage, SelectionType type) {
  const Applicability a = applicability(id);
  const bool stage_ok = supported(stage == Stage::kSingle ? a.single_stage : a.two_stage);
  const bool type_ok = supported(type == SelectionType::kSoft ? a.soft : a.hard);
  return stage_ok && type_ok;
}

void require_applicable(SelectorId id, Stage stage, SelectionType type) {
  if (!is_applicable(id, stage, type)) {
    throw ApplicabilityError(fmt::format("{} does not support {}-stage {} selection", to_string(id), to_string(stage),
                                         to_string(type)));
  }
}

bool produces_ranking(SelectorId id) { return id != SelectorId::kAdaFS; }

}  // namespace fsbench
