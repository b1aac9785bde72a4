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

// Signatures, hashing and the salted commitment that stands in for the
// holder's travel document on the ledger.
//
// Ed25519 and SHA-256 come from libsodium. Ed25519 signing is deterministic,
// so signed structures have stable golden vectors.

#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

#include "dhp/core.hpp"

namespace dhp {

using PublicKey = std::array<std::uint8_t, 32>;
using SecretKey = std::array<std::uint8_t, 32>;  // Ed25519 seed
using KeySeed = std::array<std::uint8_t, 32>;

inline constexpr std::size_t kSignatureSize = 64;

struct KeyPair {
  SecretKey secret{};
  PublicKey public_key{};
  ActorId owner;
};

Digest sha256(ByteView data);
// Hash of the concatenation of `parts`.
Digest sha256(std::initializer_list<ByteView> parts);

// First 16 bytes of SHA-256("ACTOR|" ‖ role ‖ public key).
MemberId derive_member_id(Role role, const PublicKey& public_key);

// With a seed the pair is a pure function of (role, seed); otherwise the
// secret is drawn from the OS CSPRNG.
KeyPair keygen(Role role, const std::optional<KeySeed>& seed = std::nullopt);

// Rebuilds a key pair from its secret. Throws kMalformedKey if `secret` is not
// 32 bytes.
KeyPair keypair_from_secret(Role role, ByteView secret);

// Throws kMalformedKey if `secret` is not a 32-byte seed.
Signature sign(ByteView secret, ByteView message);
inline Signature sign(const KeyPair& key, ByteView message) {
  return sign(key.secret, message);
}

// Total: malformed keys or signatures yield false.
bool verify_sig(ByteView public_key, ByteView message, ByteView signature);

struct Salt {
  std::array<std::uint8_t, 16> value{};

  static Salt random();

  bool operator==(const Salt&) const = default;
};

inline constexpr std::string_view kCommitmentTag = "DHPC1|";

// SHA-256("DHPC1|" ‖ salt ‖ canonical_doc_bytes(doc)). Throws
// kInvalidDocument.
Digest commit(const TravelDocument& doc, const Salt& salt);

// True iff commitment == commit(doc, salt); false for invalid documents.
bool opens(const Digest& commitment, const TravelDocument& doc, const Salt& salt);

// One line of a commitment test-vector file: `doc_hex salt_hex commitment_hex`.
struct CommitmentVector {
  Bytes doc_bytes;
  Salt salt;
  Digest commitment{};
};

std::string format_commitment_vector(const CommitmentVector& v);
// Throws kDecodeError on malformed lines.
CommitmentVector parse_commitment_vector(std::string_view line);
// Skips blank lines and lines starting with '#'.
std::vector<CommitmentVector> read_commitment_vectors(const std::string& path);
void write_commitment_vectors(const std::string& path,
                              const std::vector<CommitmentVector>& vectors);

}  // namespace dhp
