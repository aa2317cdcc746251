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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fsbench/tensor.hpp"

namespace fsbench {

// Flat little-endian parameter file:
//   u32 magic 'FSBP' | u32 version | u64 count
//   per parameter: u32 name_len | name bytes | u32 rank | u64 dims[rank] | f64 data[prod(dims)]
inline constexpr std::uint32_t kCheckpointMagic = 0x50425346;  // "FSBP"
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  Tensor value;
};

/// Little-endian byte sink/source shared by the binary formats.
class ByteWriter {
 public:
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f64(double v);
  void bytes(std::string_view s);
  void str(std::string_view s);  // u32 length + bytes
  const std::string& buffer() const noexcept { return buf_; }

 private:
  std::string buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}
  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  std::string bytes(std::size_t n);
  std::string str();
  bool done() const noexcept { return pos_ == data_.size(); }
  std::size_t position() const noexcept { return pos_; }

 private:
  void need(std::size_t n) const;
  std::string_view data_;
  std::size_t pos_ = 0;
};

void write_parameters(ByteWriter& out, std::span<const Parameter* const> params);
std::vector<NamedTensor> read_parameters(ByteReader& in);

std::string encode_parameters(std::span<const Parameter* const> params);
std::vector<NamedTensor> decode_parameters(std::string_view bytes);

}  // namespace fsbench
