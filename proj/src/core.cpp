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

#include "dhp/core.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>

namespace dhp {

namespace {

using std::chrono::days;
using std::chrono::year_month_day;

bool is_upper_alnum(char c) {
  return (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

bool is_upper_alpha(char c) { return c >= 'A' && c <= 'Z'; }

int parse_int(std::string_view text) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(ErrorCode::kDecodeError, "bad number '" + std::string(text) + "'");
  }
  return value;
}

void check_method_code(std::string_view code) {
  if (code.empty()) {
    throw Error(ErrorCode::kEncodingError, "empty test method code");
  }
  if (code.size() > 255) {
    throw Error(ErrorCode::kEncodingError, "test method code exceeds 255 bytes");
  }
  for (char c : code) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      throw Error(ErrorCode::kEncodingError, "whitespace in test method code");
    }
  }
}

}  // namespace

UtcDate parse_date(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
    throw Error(ErrorCode::kDecodeError, "expected YYYY-MM-DD, got '" + std::string(text) + "'");
  }
  year_month_day ymd{std::chrono::year{parse_int(text.substr(0, 4))},
                     std::chrono::month{static_cast<unsigned>(parse_int(text.substr(5, 2)))},
                     std::chrono::day{static_cast<unsigned>(parse_int(text.substr(8, 2)))}};
  if (!ymd.ok()) {
    throw Error(ErrorCode::kDecodeError, "invalid calendar date '" + std::string(text) + "'");
  }
  return UtcDate{ymd};
}

std::string format_date(UtcDate date) {
  year_month_day ymd{date};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

void validate(const TravelDocument& doc) {
  const auto& n = doc.doc_number;
  if (n.size() < 5 || n.size() > 20) {
    throw Error(ErrorCode::kInvalidDocument,
                "doc_number must be 5-20 characters, got " + std::to_string(n.size()));
  }
  if (!std::all_of(n.begin(), n.end(), is_upper_alnum)) {
    throw Error(ErrorCode::kInvalidDocument, "doc_number must be uppercase alphanumeric");
  }
  const auto& c = doc.issuing_country;
  if (c.size() != 3 || !std::all_of(c.begin(), c.end(), is_upper_alpha)) {
    throw Error(ErrorCode::kInvalidDocument, "issuing_country must be 3 uppercase letters");
  }
  auto day_count = doc.expiry.time_since_epoch().count();
  if (day_count < 0 || day_count > static_cast<std::int64_t>(UINT32_MAX)) {
    throw Error(ErrorCode::kInvalidDocument, "expiry outside encodable range");
  }
}

Bytes canonical_doc_bytes(const TravelDocument& doc) {
  validate(doc);
  ByteWriter out;
  out.put_u16(static_cast<std::uint16_t>(doc.doc_number.size()))
      .put(doc.doc_number)
      .put(doc.issuing_country)
      .put_u32(static_cast<std::uint32_t>(doc.expiry.time_since_epoch().count()));
  return std::move(out).bytes();
}

TravelDocument decode_doc_bytes(ByteView bytes) {
  ByteReader in(bytes);
  TravelDocument doc;
  std::uint16_t len = in.u16();
  ByteView number = in.take(len);
  doc.doc_number.assign(number.begin(), number.end());
  ByteView country = in.take(3);
  doc.issuing_country.assign(country.begin(), country.end());
  doc.expiry = UtcDate{days{in.u32()}};
  in.finish();
  try {
    validate(doc);
  } catch (const Error& e) {
    throw Error(ErrorCode::kDecodeError, e.what());
  }
  return doc;
}

const std::set<std::string>& known_method_codes() {
  static const std::set<std::string> kCodes = {"RT-qPCR", "RT-LAMP", "RAT"};
  return kCodes;
}

TestMethod TestMethod::from_code(std::string code) {
  bool known = known_method_codes().contains(code);
  return TestMethod{std::move(code), known};
}

std::string_view role_name(Role role) {
  switch (role) {
    case Role::kThf: return "thf";
    case Role::kHsa: return "hsa";
    case Role::kBm: return "bm";
    case Role::kCitizen: return "citizen";
  }
  return "unknown";
}

Role parse_role(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "thf") return Role::kThf;
  if (lower == "hsa") return Role::kHsa;
  if (lower == "bm") return Role::kBm;
  if (lower == "citizen") return Role::kCitizen;
  throw Error(ErrorCode::kDecodeError, "unknown role '" + std::string(text) + "'");
}

Role role_from_byte(std::uint8_t b) {
  if (b < 1 || b > 4) {
    throw Error(ErrorCode::kDecodeError, "unknown role byte " + std::to_string(b));
  }
  return static_cast<Role>(b);
}

Bytes dhp_signing_bytes(const Digest& commitment, bool result, UtcSeconds tested_at,
                        const TestMethod& method, const MemberId& issuer_id) {
  check_method_code(method.code);
  ByteWriter out;
  out.put(kDhpSigningTag)
      .put(commitment)
      .put_u8(result ? 0x01 : 0x00)
      .put_i64(to_unix(tested_at))
      .put_u8(static_cast<std::uint8_t>(method.code.size()))
      .put(method.code)
      .put(issuer_id);
  return std::move(out).bytes();
}

Bytes dhp_signing_bytes(const HealthPassport& record) {
  return dhp_signing_bytes(record.commitment, record.result, record.tested_at,
                           record.method, record.issuer_id);
}

void encode_record(ByteWriter& out, const HealthPassport& record) {
  if (record.issuer_signature.size() > 255) {
    throw Error(ErrorCode::kEncodingError, "signature exceeds 255 bytes");
  }
  out.put(dhp_signing_bytes(record))
      .put_u8(static_cast<std::uint8_t>(record.issuer_signature.size()))
      .put(record.issuer_signature);
}

Bytes encode_record(const HealthPassport& record) {
  ByteWriter out;
  encode_record(out, record);
  return std::move(out).bytes();
}

HealthPassport decode_record(ByteReader& in) {
  HealthPassport record;
  in.expect(kDhpSigningTag);
  record.commitment = in.fixed<32>();
  std::uint8_t result = in.u8();
  if (result > 1) {
    throw Error(ErrorCode::kDecodeError, "result byte must be 0 or 1");
  }
  record.result = result == 1;
  record.tested_at = utc_seconds(in.i64());
  ByteView code = in.take(in.u8());
  std::string code_text(code.begin(), code.end());
  try {
    check_method_code(code_text);
  } catch (const Error& e) {
    throw Error(ErrorCode::kDecodeError, e.what());
  }
  record.method = TestMethod::from_code(std::move(code_text));
  record.issuer_id = in.fixed<16>();
  ByteView sig = in.take(in.u8());
  record.issuer_signature.assign(sig.begin(), sig.end());
  return record;
}

void HygienePolicy::validate() const {
  if (accepted_methods.empty()) {
    throw Error(ErrorCode::kInvalidConfig, "policy accepts no test methods");
  }
  if (max_test_age.count() <= 0) {
    throw Error(ErrorCode::kInvalidConfig, "max_test_age must be positive");
  }
}

}  // namespace dhp
