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

#include "dhp/crypto.hpp"

#include <sodium.h>

#include <fstream>
#include <mutex>
#include <sstream>

namespace dhp {

namespace {

void ensure_sodium() {
  static std::once_flag once;
  std::call_once(once, [] {
    if (sodium_init() < 0) {
      throw Error(ErrorCode::kIoError, "libsodium initialisation failed");
    }
  });
}

}  // namespace

Digest sha256(ByteView data) { return sha256({data}); }

Digest sha256(std::initializer_list<ByteView> parts) {
  ensure_sodium();
  crypto_hash_sha256_state state;
  crypto_hash_sha256_init(&state);
  for (ByteView part : parts) {
    crypto_hash_sha256_update(&state, part.data(), part.size());
  }
  Digest out{};
  crypto_hash_sha256_final(&state, out.data());
  return out;
}

MemberId derive_member_id(Role role, const PublicKey& public_key) {
  const std::uint8_t role_byte = static_cast<std::uint8_t>(role);
  Digest d = sha256({as_bytes("ACTOR|"), ByteView(&role_byte, 1), public_key});
  MemberId id{};
  std::copy_n(d.begin(), id.size(), id.begin());
  return id;
}

KeyPair keygen(Role role, const std::optional<KeySeed>& seed) {
  ensure_sodium();
  KeySeed secret{};
  if (seed) {
    secret = *seed;
  } else {
    randombytes_buf(secret.data(), secret.size());
  }
  return keypair_from_secret(role, secret);
}

KeyPair keypair_from_secret(Role role, ByteView secret) {
  ensure_sodium();
  if (secret.size() != crypto_sign_SEEDBYTES) {
    throw Error(ErrorCode::kMalformedKey, "secret must be 32 bytes");
  }
  KeyPair kp;
  std::copy(secret.begin(), secret.end(), kp.secret.begin());
  std::array<std::uint8_t, crypto_sign_SECRETKEYBYTES> expanded{};
  crypto_sign_seed_keypair(kp.public_key.data(), expanded.data(), kp.secret.data());
  sodium_memzero(expanded.data(), expanded.size());
  kp.owner = ActorId{role, derive_member_id(role, kp.public_key)};
  return kp;
}

Signature sign(ByteView secret, ByteView message) {
  ensure_sodium();
  if (secret.size() != crypto_sign_SEEDBYTES) {
    throw Error(ErrorCode::kMalformedKey, "secret must be 32 bytes");
  }
  std::array<std::uint8_t, crypto_sign_PUBLICKEYBYTES> pk{};
  std::array<std::uint8_t, crypto_sign_SECRETKEYBYTES> expanded{};
  crypto_sign_seed_keypair(pk.data(), expanded.data(), secret.data());
  Signature sig(crypto_sign_BYTES);
  crypto_sign_detached(sig.data(), nullptr, message.data(), message.size(),
                       expanded.data());
  sodium_memzero(expanded.data(), expanded.size());
  return sig;
}

bool verify_sig(ByteView public_key, ByteView message, ByteView signature) {
  ensure_sodium();
  if (public_key.size() != crypto_sign_PUBLICKEYBYTES ||
      signature.size() != crypto_sign_BYTES) {
    return false;
  }
  return crypto_sign_verify_detached(signature.data(), message.data(),
                                     message.size(), public_key.data()) == 0;
}

Salt Salt::random() {
  ensure_sodium();
  Salt s;
  randombytes_buf(s.value.data(), s.value.size());
  return s;
}

Digest commit(const TravelDocument& doc, const Salt& salt) {
  Bytes doc_bytes = canonical_doc_bytes(doc);
  return sha256({as_bytes(kCommitmentTag), salt.value, doc_bytes});
}

bool opens(const Digest& commitment, const TravelDocument& doc, const Salt& salt) {
  try {
    return commit(doc, salt) == commitment;
  } catch (const Error&) {
    return false;
  }
}

std::string format_commitment_vector(const CommitmentVector& v) {
  return to_hex(v.doc_bytes) + " " + to_hex(v.salt.value) + " " + to_hex(v.commitment);
}

CommitmentVector parse_commitment_vector(std::string_view line) {
  std::istringstream in{std::string(line)};
  std::string doc_hex, salt_hex, commitment_hex, extra;
  if (!(in >> doc_hex >> salt_hex >> commitment_hex) || (in >> extra)) {
    throw Error(ErrorCode::kDecodeError, "expected three hex fields");
  }
  CommitmentVector v;
  v.doc_bytes = from_hex(doc_hex);
  v.salt.value = fixed_from_hex<16>(salt_hex);
  v.commitment = fixed_from_hex<32>(commitment_hex);
  return v;
}

std::vector<CommitmentVector> read_commitment_vectors(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path);
  std::vector<CommitmentVector> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    out.push_back(parse_commitment_vector(line));
  }
  return out;
}

void write_commitment_vectors(const std::string& path,
                              const std::vector<CommitmentVector>& vectors) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path);
  for (const auto& v : vectors) out << format_commitment_vector(v) << '\n';
}

}  // namespace dhp
