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

#include "dhp/protocol.hpp"

#include <algorithm>
#include <filesystem>
#include <numeric>
#include <set>
#include <sstream>

#include "dhp/framed_log.hpp"
#include "dhp/kv.hpp"

namespace dhp {

CitizenWallet register_citizen(const TravelDocument& doc) {
  validate(doc);
  return CitizenWallet{doc, keygen(Role::kCitizen), {}};
}

Bytes encode_pending(const PendingDhp& pending) {
  ByteWriter out;
  out.put(kPendingTag);
  encode_record(out, pending.record);
  out.put(pending.salt.value);
  return std::move(out).bytes();
}

PendingDhp decode_pending(ByteView bytes) {
  ByteReader in(bytes);
  in.expect(kPendingTag);
  PendingDhp p;
  p.record = decode_record(in);
  p.salt.value = in.fixed<16>();
  in.finish();
  p.thf_id = ActorId{Role::kThf, p.record.issuer_id};
  return p;
}

PendingDhp thf_issue(const KeyPair& thf, const TravelDocument& doc, bool result,
                     const TestMethod& method, UtcSeconds tested_at, UtcSeconds now,
                     std::optional<Salt> salt) {
  if (thf.owner.role != Role::kThf) {
    throw Error(ErrorCode::kNotAuthorizedIssuer,
                std::string(role_name(thf.owner.role)) + " keys cannot issue DHPs");
  }
  if (!result) {
    throw Error(ErrorCode::kNotRiskFree, "no DHP is issued for a positive test");
  }
  if (tested_at > now) {
    throw Error(ErrorCode::kFutureTimestamp, "tested_at is later than the issuing clock");
  }
  PendingDhp out;
  out.salt = salt.value_or(Salt::random());
  out.thf_id = thf.owner;
  HealthPassport& r = out.record;
  r.commitment = commit(doc, out.salt);
  r.result = result;
  r.tested_at = tested_at;
  r.method = method;
  r.issuer_id = thf.owner.id;
  r.issuer_signature = sign(thf, dhp_signing_bytes(r));
  return out;
}

std::vector<DhpToken> hsa_register(const KeyPair& hsa, ChainState& state,
                                   std::span<const PendingDhp> pending, UtcSeconds now) {
  std::vector<HealthPassport> records;
  records.reserve(pending.size());
  for (const auto& p : pending) records.push_back(p.record);
  Block block = propose_block(state, std::move(records), hsa, now);

  const Digest hash = header_hash(block.header);
  std::vector<DhpToken> tokens;
  tokens.reserve(pending.size());
  for (const auto& p : pending) {
    auto it = std::lower_bound(block.records.begin(), block.records.end(), p.record.commitment,
                               [](const HealthPassport& r, const Digest& c) {
                                 return r.commitment < c;
                               });
    tokens.push_back(DhpToken{hash, static_cast<std::uint32_t>(it - block.records.begin()),
                              p.salt});
  }
  if (auto err = state.append(std::move(block), now)) {
    throw Error(ErrorCode::kValidationFailed, std::string(to_string(*err)));
  }
  return tokens;
}

std::string_view to_string(PolicyViolation v) {
  switch (v) {
    case PolicyViolation::kNotRiskFree: return "NotRiskFree";
    case PolicyViolation::kMethodNotAccepted: return "MethodNotAccepted";
    case PolicyViolation::kTestTooOld: return "TestTooOld";
    case PolicyViolation::kTestInFuture: return "TestInFuture";
  }
  return "Unknown";
}

std::optional<PolicyViolation> check_policy(const HealthPassport& dhp,
                                            const HygienePolicy& policy, UtcSeconds at) {
  if (policy.require_risk_free && !dhp.result) return PolicyViolation::kNotRiskFree;
  if (!policy.accepted_methods.contains(dhp.method.code)) {
    return PolicyViolation::kMethodNotAccepted;
  }
  if (dhp.tested_at > at) return PolicyViolation::kTestInFuture;
  if (at - dhp.tested_at > policy.max_test_age) return PolicyViolation::kTestTooOld;
  return std::nullopt;
}

std::string_view to_string(VerificationStatus s) {
  switch (s) {
    case VerificationStatus::kValid: return "Valid";
    case VerificationStatus::kNotFound: return "NotFound";
    case VerificationStatus::kCommitmentMismatch: return "CommitmentMismatch";
    case VerificationStatus::kBadIssuerSignature: return "BadIssuerSignature";
    case VerificationStatus::kUnknownIssuer: return "UnknownIssuer";
    case VerificationStatus::kPolicyViolation: return "PolicyViolation";
  }
  return "Unknown";
}

Bytes receipt_signing_bytes(const VerificationReceipt& receipt) {
  ByteWriter out;
  out.put(kReceiptTag)
      .put_u8(static_cast<std::uint8_t>(receipt.bm_id.role))
      .put(receipt.bm_id.id)
      .put(receipt.token_header_hash)
      .put_u32(receipt.record_index)
      .put_u8(static_cast<std::uint8_t>(receipt.outcome_status))
      .put_i64(to_unix(receipt.checked_at));
  return std::move(out).bytes();
}

Bytes encode_receipt(const VerificationReceipt& receipt) {
  ByteWriter out;
  out.put(receipt_signing_bytes(receipt))
      .put_u8(static_cast<std::uint8_t>(receipt.bm_signature.size()))
      .put(receipt.bm_signature);
  return std::move(out).bytes();
}

VerificationReceipt decode_receipt(ByteView bytes) {
  ByteReader in(bytes);
  in.expect(kReceiptTag);
  VerificationReceipt r;
  r.bm_id.role = role_from_byte(in.u8());
  r.bm_id.id = in.fixed<16>();
  r.token_header_hash = in.fixed<32>();
  r.record_index = in.u32();
  std::uint8_t status = in.u8();
  if (status > static_cast<std::uint8_t>(VerificationStatus::kPolicyViolation)) {
    throw Error(ErrorCode::kDecodeError, "unknown outcome status " + std::to_string(status));
  }
  r.outcome_status = static_cast<VerificationStatus>(status);
  r.checked_at = utc_seconds(in.i64());
  ByteView sig = in.take(in.u8());
  r.bm_signature.assign(sig.begin(), sig.end());
  in.finish();
  return r;
}

std::string receipt_id(const VerificationReceipt& receipt) {
  return to_hex(sha256(encode_receipt(receipt)));
}

bool verify_receipt(const Registry& registry, const VerificationReceipt& receipt) {
  if (receipt.bm_id.role != Role::kBm) return false;
  const Member* bm = registry.find(receipt.bm_id);
  return bm != nullptr &&
         verify_sig(bm->public_key, receipt_signing_bytes(receipt), receipt.bm_signature);
}

namespace {

VerificationOutcome evaluate(const ChainState& state, const DhpToken& token,
                             const TravelDocument& doc, const HygienePolicy& policy,
                             UtcSeconds at) {
  VerificationOutcome out;
  out.checked_at = at;
  LookupResult found = lookup_by_token(state, token, doc);
  out.dhp_location = found.location;
  if (found.status == LookupStatus::kNotFound) {
    out.status = VerificationStatus::kNotFound;
    return out;
  }
  if (found.status == LookupStatus::kCommitmentMismatch) {
    out.status = VerificationStatus::kCommitmentMismatch;
    return out;
  }
  const HealthPassport& dhp = *found.record;
  const Member* issuer = state.registry().find(ActorId{Role::kThf, dhp.issuer_id});
  if (issuer == nullptr) {
    out.status = VerificationStatus::kUnknownIssuer;
    return out;
  }
  bool signature_ok = false;
  try {
    signature_ok = verify_sig(issuer->public_key, dhp_signing_bytes(dhp), dhp.issuer_signature);
  } catch (const Error&) {
    signature_ok = false;
  }
  if (!signature_ok) {
    out.status = VerificationStatus::kBadIssuerSignature;
    return out;
  }
  if (auto violation = check_policy(dhp, policy, at)) {
    out.status = VerificationStatus::kPolicyViolation;
    out.violation_reason = violation;
    return out;
  }
  out.status = VerificationStatus::kValid;
  return out;
}

}  // namespace

Verification bm_verify(const KeyPair& bm, const ChainState& state, const DhpToken& token,
                       const TravelDocument& doc, const HygienePolicy& policy,
                       UtcSeconds at) {
  if (bm.owner.role != Role::kBm) {
    throw Error(ErrorCode::kNotABlockchainMember,
                std::string(role_name(bm.owner.role)) + " keys cannot verify as a member");
  }
  Verification v;
  v.outcome = evaluate(state, token, doc, policy, at);
  VerificationReceipt& r = v.receipt;
  r.bm_id = bm.owner;
  r.token_header_hash = token.header_hash;
  r.record_index = token.record_index;
  r.outcome_status = v.outcome.status;
  r.checked_at = at;
  r.bm_signature = sign(bm, receipt_signing_bytes(r));
  return v;
}

std::vector<ManifestEntry> audit_manifest(const Registry& registry,
                                          std::span<const VerificationReceipt> receipts,
                                          std::span<const ManifestEntry> manifest) {
  std::set<ManifestEntry> covered;
  for (std::size_t i = 0; i < receipts.size(); ++i) {
    if (!verify_receipt(registry, receipts[i])) {
      throw Error(ErrorCode::kBadReceiptSignature,
                  "receipt " + std::to_string(i) + " is not signed by a registered BM", i);
    }
    covered.insert(ManifestEntry{receipts[i].token_header_hash, receipts[i].record_index});
  }
  std::vector<ManifestEntry> missing;
  for (const auto& entry : manifest) {
    if (!covered.contains(entry)) missing.push_back(entry);
  }
  return missing;
}

std::vector<ManifestEntry> parse_manifest(std::string_view text) {
  std::vector<ManifestEntry> out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string hash_hex, extra;
    long long index = -1;
    if (!(fields >> hash_hex)) continue;
    if (!(fields >> index) || index < 0 || index > UINT32_MAX || (fields >> extra)) {
      throw Error(ErrorCode::kDecodeError, "bad manifest line '" + line + "'");
    }
    out.push_back(ManifestEntry{fixed_from_hex<32>(hash_hex), static_cast<std::uint32_t>(index)});
  }
  return out;
}

std::string format_manifest(std::span<const ManifestEntry> manifest) {
  std::string out;
  for (const auto& e : manifest) {
    out += to_hex(e.header_hash) + " " + std::to_string(e.record_index) + "\n";
  }
  return out;
}

HygienePolicy parse_policy(std::string_view text) {
  auto kv = parse_kv(text);
  HygienePolicy policy;
  for (const auto& [key, value] : kv) {
    if (key == "accepted_methods") {
      std::istringstream in(value);
      std::string code;
      while (std::getline(in, code, ',')) {
        auto first = code.find_first_not_of(" \t");
        auto last = code.find_last_not_of(" \t");
        if (first != std::string::npos) {
          policy.accepted_methods.insert(code.substr(first, last - first + 1));
        }
      }
    } else if (key == "max_test_age_hours") {
      policy.max_test_age = std::chrono::hours{parse_integer(key, value)};
    } else if (key == "require_risk_free") {
      policy.require_risk_free = parse_bool(key, value);
    } else {
      throw Error(ErrorCode::kInvalidConfig, "unknown policy key '" + key + "'");
    }
  }
  if (!kv.contains("accepted_methods")) {
    throw Error(ErrorCode::kInvalidConfig, "policy needs accepted_methods");
  }
  policy.validate();
  return policy;
}

std::string format_policy(const HygienePolicy& policy) {
  std::string methods;
  for (const auto& m : policy.accepted_methods) {
    if (!methods.empty()) methods += ",";
    methods += m;
  }
  return "accepted_methods = " + methods + "\nmax_test_age_hours = " +
         std::to_string(policy.max_test_age.count()) +
         "\nrequire_risk_free = " + (policy.require_risk_free ? "true" : "false") + "\n";
}

std::vector<VerificationReceipt> read_receipt_log(const std::string& path) {
  Bytes file = read_file(path);
  FrameScan scan = scan_frames(file, kReceiptLogMagic);
  std::vector<VerificationReceipt> out;
  for (std::size_t i = 0; i < scan.frames.size(); ++i) {
    try {
      out.push_back(decode_receipt(scan.frames[i].payload));
    } catch (const Error& e) {
      throw Error(ErrorCode::kCorruptLog,
                  "receipt frame " + std::to_string(i) + " at offset " +
                      std::to_string(scan.frames[i].offset) + ": " + e.what(),
                  scan.frames[i].offset);
    }
  }
  return out;
}

}  // namespace dhp
