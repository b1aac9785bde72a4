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

#include "dhp/bytes.hpp"

#include <algorithm>

namespace dhp {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidDocument: return "InvalidDocument";
    case ErrorCode::kEncodingError: return "EncodingError";
    case ErrorCode::kDecodeError: return "DecodeError";
    case ErrorCode::kMalformedKey: return "MalformedKey";
    case ErrorCode::kEmptyAuthoritySet: return "EmptyAuthoritySet";
    case ErrorCode::kNotScheduled: return "NotScheduled";
    case ErrorCode::kEmptyBatch: return "EmptyBatch";
    case ErrorCode::kBatchTooLarge: return "BatchTooLarge";
    case ErrorCode::kInvalidPendingRecord: return "InvalidPendingRecord";
    case ErrorCode::kValidationFailed: return "ValidationFailed";
    case ErrorCode::kNoValidCandidate: return "NoValidCandidate";
    case ErrorCode::kNotRiskFree: return "NotRiskFree";
    case ErrorCode::kNotAuthorizedIssuer: return "NotAuthorizedIssuer";
    case ErrorCode::kFutureTimestamp: return "FutureTimestamp";
    case ErrorCode::kNotABlockchainMember: return "NotABlockchainMember";
    case ErrorCode::kBadReceiptSignature: return "BadReceiptSignature";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kInvalidRegistry: return "InvalidRegistry";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kCorruptLog: return "CorruptLog";
  }
  return "Unknown";
}

std::string to_hex(ByteView bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (std::uint8_t b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0x0f]);
  }
  return out;
}

namespace {

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

Bytes from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) {
    throw Error(ErrorCode::kDecodeError, "odd-length hex string");
  }
  Bytes out;
  out.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    int hi = hex_value(hex[i]);
    int lo = hex_value(hex[i + 1]);
    if (hi < 0 || lo < 0) {
      throw Error(ErrorCode::kDecodeError, "invalid hex character");
    }
    out.push_back(static_cast<std::uint8_t>((hi << 4) | lo));
  }
  return out;
}

ByteWriter& ByteWriter::put_u16(std::uint16_t v) {
  out_.push_back(static_cast<std::uint8_t>(v >> 8));
  out_.push_back(static_cast<std::uint8_t>(v));
  return *this;
}

ByteWriter& ByteWriter::put_u32(std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) {
    out_.push_back(static_cast<std::uint8_t>(v >> shift));
  }
  return *this;
}

ByteWriter& ByteWriter::put_u64(std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) {
    out_.push_back(static_cast<std::uint8_t>(v >> shift));
  }
  return *this;
}

ByteView ByteReader::take(std::size_t n) {
  if (remaining() < n) {
    throw Error(ErrorCode::kDecodeError,
                "truncated input at offset " + std::to_string(pos_));
  }
  ByteView out = in_.subspan(pos_, n);
  pos_ += n;
  return out;
}

std::uint8_t ByteReader::u8() { return take(1)[0]; }

std::uint16_t ByteReader::u16() {
  ByteView v = take(2);
  return static_cast<std::uint16_t>((v[0] << 8) | v[1]);
}

std::uint32_t ByteReader::u32() {
  ByteView v = take(4);
  std::uint32_t out = 0;
  for (std::uint8_t b : v) out = (out << 8) | b;
  return out;
}

std::uint64_t ByteReader::u64() {
  ByteView v = take(8);
  std::uint64_t out = 0;
  for (std::uint8_t b : v) out = (out << 8) | b;
  return out;
}

void ByteReader::expect(std::string_view tag) {
  ByteView v = take(tag.size());
  if (!std::equal(v.begin(), v.end(), as_bytes(tag).begin())) {
    throw Error(ErrorCode::kDecodeError,
                "missing tag '" + std::string(tag) + "'");
  }
}

void ByteReader::finish() const {
  if (!done()) {
    throw Error(ErrorCode::kDecodeError,
                std::to_string(remaining()) + " trailing bytes");
  }
}

}  // namespace dhp
