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

#include "fsbench/checkpoint.hpp"

#include <bit>
#include <cstring>

#include <fmt/format.h>

#include "fsbench/error.hpp"

namespace fsbench {

void ByteWriter::u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void ByteWriter::u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void ByteWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void ByteWriter::bytes(std::string_view s) { buf_.append(s); }

void ByteWriter::str(std::string_view s) {
  u32(static_cast<std::uint32_t>(s.size()));
  bytes(s);
}

void ByteReader::need(std::size_t n) const {
  if (data_.size() - pos_ < n) {
    throw ConfigError(fmt::format("truncated binary file: need {} bytes at offset {}", n, pos_));
  }
}

std::uint32_t ByteReader::u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
  pos_ += 4;
  return v;
}

std::uint64_t ByteReader::u64() {
  need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
  pos_ += 8;
  return v;
}

double ByteReader::f64() { return std::bit_cast<double>(u64()); }

std::string ByteReader::bytes(std::size_t n) {
  need(n);
  std::string s(data_.substr(pos_, n));
  pos_ += n;
  return s;
}

std::string ByteReader::str() { return bytes(u32()); }

void write_parameters(ByteWriter& out, std::span<const Parameter* const> params) {
  out.u32(kCheckpointMagic);
  out.u32(kCheckpointVersion);
  out.u64(params.size());
  for (const Parameter* p : params) {
    out.str(p->name);
    out.u32(static_cast<std::uint32_t>(p->value.rank()));
    for (std::size_t d : p->value.shape()) out.u64(d);
    for (double v : p->value.data()) out.f64(v);
  }
}

std::vector<NamedTensor> read_parameters(ByteReader& in) {
  if (in.u32() != kCheckpointMagic) throw ConfigError("checkpoint: bad magic");
  const std::uint32_t version = in.u32();
  if (version != kCheckpointVersion) throw ConfigError(fmt::format("checkpoint: unsupported version {}", version));
  const std::uint64_t count = in.u64();
  std::vector<NamedTensor> out;
  for (std::uint64_t k = 0; k < count; ++k) {
    NamedTensor nt;
    nt.name = in.str();
    const std::uint32_t rank = in.u32();
    std::vector<std::size_t> shape(rank);
    std::size_t n = 1;
    for (auto& d : shape) {
      d = in.u64();
      n *= d;
    }
    std::vector<double> data(n);
    for (double& v : data) v = in.f64();
    nt.value = Tensor(std::move(shape), std::move(data));
    out.push_back(std::move(nt));
  }
  return out;
}

std::string encode_parameters(std::span<const Parameter* const> params) {
  ByteWriter w;
  write_parameters(w, params);
  return w.buffer();
}

std::vector<NamedTensor> decode_parameters(std::string_view bytes) {
  ByteReader r(bytes);
  auto out = read_parameters(r);
  if (!r.done()) throw ConfigError("checkpoint: trailing bytes");
  return out;
}

}  // namespace fsbench
