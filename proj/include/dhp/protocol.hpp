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

// Actor flows: citizen registration, THF issuance, HSA registration, BM
// verification against a hygiene policy, and the signed receipts that make
// verification auditable against a passenger manifest.

#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dhp/ledger.hpp"

namespace dhp {

struct CitizenWallet {
  TravelDocument doc;
  KeyPair wallet_key;
  std::vector<DhpToken> tokens;
};

// Throws kInvalidDocument.
CitizenWallet register_citizen(const TravelDocument& doc);

// An issued DHP on its way from the THF to its HSA. The salt travels with it
// so the HSA can hand back a complete token; the document itself does not.
struct PendingDhp {
  HealthPassport record;
  Salt salt;
  ActorId thf_id;
};

inline constexpr std::string_view kPendingTag = "DHPP1|";
// "DHPP1|" ‖ record frame ‖ 16-byte salt.
Bytes encode_pending(const PendingDhp& pending);
PendingDhp decode_pending(ByteView bytes);

// Issues and signs a DHP for `doc`. A fresh salt is drawn unless one is
// supplied. Throws kNotRiskFree (result == false), kNotAuthorizedIssuer
// (key role is not THF), kFutureTimestamp (tested_at > now) and
// kInvalidDocument.
PendingDhp thf_issue(const KeyPair& thf, const TravelDocument& doc, bool result,
                     const TestMethod& method, UtcSeconds tested_at, UtcSeconds now,
                     std::optional<Salt> salt = std::nullopt);

// Proposes and appends one block holding every pending record. Returns one
// token per input, in input order, pointing at the record's position after
// canonical sorting. `state` is untouched on error. Throws the
// propose_block errors, or kValidationFailed if the block does not append.
std::vector<DhpToken> hsa_register(const KeyPair& hsa, ChainState& state,
                                   std::span<const PendingDhp> pending, UtcSeconds now);

enum class PolicyViolation : std::uint8_t {
  kNotRiskFree = 1,
  kMethodNotAccepted = 2,
  kTestTooOld = 3,
  kTestInFuture = 4,
};

std::string_view to_string(PolicyViolation v);

// nullopt when the record satisfies `policy` at time `at`. The age window is
// inclusive: a test exactly max_test_age old passes.
std::optional<PolicyViolation> check_policy(const HealthPassport& dhp,
                                            const HygienePolicy& policy, UtcSeconds at);

enum class VerificationStatus : std::uint8_t {
  kValid = 0,
  kNotFound = 1,
  kCommitmentMismatch = 2,
  kBadIssuerSignature = 3,
  kUnknownIssuer = 4,
  kPolicyViolation = 5,
};

std::string_view to_string(VerificationStatus s);

struct VerificationOutcome {
  VerificationStatus status = VerificationStatus::kNotFound;
  std::optional<PolicyViolation> violation_reason;  // iff kPolicyViolation
  std::optional<RecordLocation> dhp_location;       // iff the record was located
  UtcSeconds checked_at{};

  bool operator==(const VerificationOutcome&) const = default;
};

struct VerificationReceipt {
  ActorId bm_id;
  Digest token_header_hash{};
  std::uint32_t record_index = 0;
  VerificationStatus outcome_status = VerificationStatus::kNotFound;
  UtcSeconds checked_at{};
  Signature bm_signature;

  bool operator==(const VerificationReceipt&) const = default;
};

inline constexpr std::string_view kReceiptTag = "DHPRC1|";
// "DHPRC1|" ‖ u8 role ‖ 16-byte BM id ‖ header hash ‖ u32 index ‖ u8 status ‖
// i64 checked_at.
Bytes receipt_signing_bytes(const VerificationReceipt& receipt);
// Signing bytes ‖ u8 sig len ‖ sig.
Bytes encode_receipt(const VerificationReceipt& receipt);
VerificationReceipt decode_receipt(ByteView bytes);
// Hex SHA-256 of the encoded receipt.
std::string receipt_id(const VerificationReceipt& receipt);
bool verify_receipt(const Registry& registry, const VerificationReceipt& receipt);

struct Verification {
  VerificationOutcome outcome;
  VerificationReceipt receipt;
};

// Token lookup, issuer check, signature check, policy check; the status is the
// first failure in that order. A signed receipt is produced for every
// outcome. Throws kNotABlockchainMember if `bm` is not a BM key.
Verification bm_verify(const KeyPair& bm, const ChainState& state, const DhpToken& token,
                       const TravelDocument& doc, const HygienePolicy& policy,
                       UtcSeconds at);

struct ManifestEntry {
  Digest header_hash{};
  std::uint32_t record_index = 0;

  auto operator<=>(const ManifestEntry&) const = default;
};

// Manifest entries not covered by any receipt (empty means every traveller
// was verified). Throws kBadReceiptSignature with detail() = receipt index
// when a receipt is not signed by a registered BM.
std::vector<ManifestEntry> audit_manifest(const Registry& registry,
                                          std::span<const VerificationReceipt> receipts,
                                          std::span<const ManifestEntry> manifest);

// Manifest file: one `header_hash_hex record_index` per line.
std::vector<ManifestEntry> parse_manifest(std::string_view text);
std::string format_manifest(std::span<const ManifestEntry> manifest);

// Key-value policy text: `accepted_methods = A,B`, `max_test_age_hours = 72`,
// `require_risk_free = true`. Throws kInvalidConfig.
HygienePolicy parse_policy(std::string_view text);
std::string format_policy(const HygienePolicy& policy);

inline constexpr std::string_view kReceiptLogMagic = "DHPR";
// Throws kCorruptLog on a damaged file; a torn final frame is ignored.
std::vector<VerificationReceipt> read_receipt_log(const std::string& path);

}  // namespace dhp
