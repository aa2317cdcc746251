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

#include <ostream>
#include <span>
#include <string>

namespace fsbench::cli {

/// Entry point of the `fsbench` tool. `args` excludes the program name.
/// Summary lines go to `out`, progress and errors to `err`. Returns the
/// process exit code: 0 ok, 2 config, 3 applicability, 4 missing input,
/// 5 numeric failure.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace fsbench::cli
