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

#include <stdexcept>
#include <string>

namespace fsbench {

/// Broad failure classes. Each maps onto one CLI exit code.
enum class ErrorKind {
  kConfig,         // bad configuration, schema, or precondition (exit 2)
  kApplicability,  // selector/stage/selection combination not permitted (exit 3)
  kMissingInput,   // file, artifact, or record not found (exit 4)
  kNumeric,        // divergence, undefined metric, degenerate data (exit 5)
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error(ErrorKind::kConfig, what) {}
};

// Missing column, duplicate field names, out-of-schema references.
struct SchemaError : ConfigError {
  explicit SchemaError(const std::string& what) : ConfigError("schema error: " + what) {}
};

struct LabelError : ConfigError {
  explicit LabelError(const std::string& what) : ConfigError("label error: " + what) {}
};

// Shape mismatch inside a tensor op; the message names the op.
struct DimensionError : ConfigError {
  explicit DimensionError(const std::string& what)
      : ConfigError("dimension error: " + what) {}
};

struct BoundsError : ConfigError {
  explicit BoundsError(const std::string& what) : ConfigError("bounds error: " + what) {}
};

// A protocol step was invoked out of order (untrained model, missing val split, ...).
struct ProtocolError : ConfigError {
  explicit ProtocolError(const std::string& what)
      : ConfigError("protocol error: " + what) {}
};

struct TilingError : ConfigError {
  explicit TilingError(const std::string& what) : ConfigError("tiling error: " + what) {}
};

struct ApplicabilityError : Error {
  explicit ApplicabilityError(const std::string& what)
      : Error(ErrorKind::kApplicability, "applicability error: " + what) {}
};

struct MissingInputError : Error {
  explicit MissingInputError(const std::string& what)
      : Error(ErrorKind::kMissingInput, what) {}
};

struct NumericError : Error {
  explicit NumericError(const std::string& what) : Error(ErrorKind::kNumeric, what) {}
};

/// Exit code for the CLI: 2 config, 3 applicability, 4 missing inputs, 5 numeric.
int exit_code_for(ErrorKind kind) noexcept;

}  // namespace fsbench
