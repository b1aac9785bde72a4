// Copyright 2026 The DHP Framework Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dhp/error.hpp"

namespace dhp {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;
using Digest = std::array<std::uint8_t, 32>;

inline ByteView as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

std::string to_hex(ByteView bytes);

// Lowercase or uppercase hex accepted; throws kDecodeError on odd length or
// non-hex characters.
Bytes from_hex(std::string_view hex);

template <std::size_t N>
std::array<std::uint8_t, N> fixed_from_hex(std::string_view hex) {
  Bytes raw = from_hex(hex);
  if (raw.size() != N) {
    throw Error(ErrorCode::kDecodeError,
                "expected " + std::to_string(N) + " hex bytes, got " +
                    std::to_string(raw.size()));
  }
  std::array<std::uint8_t, N> out{};
  std::copy(raw.begin(), raw.end(), out.begin());
  return out;
}

// Big-endian writer for the canonical encodings.
class ByteWriter {
 public:
  ByteWriter& put_u8(std::uint8_t v) {
    out_.push_back(v);
    return *this;
  }
  ByteWriter& put_u16(std::uint16_t v);
  ByteWriter& put_u32(std::uint32_t v);
  ByteWriter& put_u64(std::uint64_t v);
  ByteWriter& put_i64(std::int64_t v) {
    return put_u64(static_cast<std::uint64_t>(v));
  }
  ByteWriter& put(ByteView bytes) {
    out_.insert(out_.end(), bytes.begin(), bytes.end());
    return *this;
  }
  ByteWriter& put(std::string_view s) { return put(as_bytes(s)); }

  const Bytes& bytes() const& { return out_; }
  Bytes bytes() && { return std::move(out_); }

 private:
  Bytes out_;
};

// Big-endian reader; every accessor throws kDecodeError when the input is
// exhausted.
class ByteReader {
 public:
  explicit ByteReader(ByteView in) : in_(in) {}

  std::uint8_t u8();
  std::uint16_t u16();
  std::uint32_t u32();
  std::uint64_t u64();
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  ByteView take(std::size_t n);
  template <std::size_t N>
  std::array<std::uint8_t, N> fixed() {
    ByteView v = take(N);
    std::array<std::uint8_t, N> out{};
    std::copy(v.begin(), v.end(), out.begin());
    return out;
  }
  // Consumes `tag` or throws.
  void expect(std::string_view tag);

  std::size_t remaining() const { return in_.size() - pos_; }
  std::size_t position() const { return pos_; }
  bool done() const { return pos_ == in_.size(); }
  // Throws unless every byte was consumed.
  void finish() const;

 private:
  ByteView in_;
  std::size_t pos_ = 0;
};

}  // namespace dhp
