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

// Domain types and the canonical byte encodings every other module signs,
// hashes, or persists.

#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <set>
#include <string>
#include <string_view>

#include "dhp/bytes.hpp"

namespace dhp {

// UTC, whole seconds. Timestamps never carry a timezone or sub-second part.
using UtcSeconds = std::chrono::sys_seconds;
using UtcDate = std::chrono::sys_days;

inline UtcSeconds utc_seconds(std::int64_t since_epoch) {
  return UtcSeconds{std::chrono::seconds{since_epoch}};
}
inline std::int64_t to_unix(UtcSeconds t) { return t.time_since_epoch().count(); }

// "YYYY-MM-DD"; throws kDecodeError.
UtcDate parse_date(std::string_view text);
std::string format_date(UtcDate date);

// Minimal machine-readable subset of a passport or ID card. The holder name is
// deliberately absent.
struct TravelDocument {
  std::string doc_number;       // [A-Z0-9]{5,20}
  std::string issuing_country;  // ISO 3166-1 alpha-3
  UtcDate expiry;

  bool operator==(const TravelDocument&) const = default;
};

// Throws kInvalidDocument.
void validate(const TravelDocument& doc);

// u16-BE length ‖ doc_number ‖ 3-byte country ‖ u32-BE days since epoch.
Bytes canonical_doc_bytes(const TravelDocument& doc);
// Inverse of canonical_doc_bytes; rejects trailing bytes and invalid fields.
TravelDocument decode_doc_bytes(ByteView bytes);

struct TestMethod {
  std::string code;
  // True when the code is on the consortium's published method list.
  bool registry_known = false;

  static TestMethod from_code(std::string code);

  bool operator==(const TestMethod& other) const { return code == other.code; }
};

// Codes published to all members; anything else is still encodable.
const std::set<std::string>& known_method_codes();

enum class Role : std::uint8_t {
  kThf = 1,
  kHsa = 2,
  kBm = 3,
  kCitizen = 4,
};

std::string_view role_name(Role role);
// Accepts "thf", "hsa", "bm", "citizen" in any case; throws kDecodeError.
Role parse_role(std::string_view text);
Role role_from_byte(std::uint8_t b);

using MemberId = std::array<std::uint8_t, 16>;

// Identity of a consortium participant. The verification key is bound to the
// identity by the consortium registry.
struct ActorId {
  Role role = Role::kCitizen;
  MemberId id{};

  auto operator<=>(const ActorId&) const = default;
};

using Signature = Bytes;

// One on-ledger DHP record: commitment to the holder's document, test result,
// test time, test method and the issuing facility's signature.
struct HealthPassport {
  Digest commitment{};
  bool result = false;  // true = risk-free
  UtcSeconds tested_at{};
  TestMethod method;
  MemberId issuer_id{};
  Signature issuer_signature;

  bool operator==(const HealthPassport& other) const {
    return commitment == other.commitment && result == other.result &&
           tested_at == other.tested_at && method == other.method &&
           issuer_id == other.issuer_id &&
           issuer_signature == other.issuer_signature;
  }
};

inline constexpr std::string_view kDhpSigningTag = "DHPv1|";

// "DHPv1|" ‖ commitment ‖ result byte ‖ i64-BE tested_at ‖ u8 len ‖ method
// code ‖ 16-byte issuer id. Throws kEncodingError if the method code is empty,
// contains whitespace or exceeds 255 bytes.
Bytes dhp_signing_bytes(const Digest& commitment, bool result,
                        UtcSeconds tested_at, const TestMethod& method,
                        const MemberId& issuer_id);
Bytes dhp_signing_bytes(const HealthPassport& record);

// Record frame: signing bytes ‖ u8 signature length ‖ signature.
Bytes encode_record(const HealthPassport& record);
void encode_record(ByteWriter& out, const HealthPassport& record);
HealthPassport decode_record(ByteReader& in);

// Entry conditions a destination enforces on presented DHPs.
struct HygienePolicy {
  std::set<std::string> accepted_methods;
  std::chrono::hours max_test_age{72};
  bool require_risk_free = true;

  // Throws kInvalidConfig.
  void validate() const;
};

}  // namespace dhp
