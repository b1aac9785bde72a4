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

// The DHP Blockchain: blocks of DHP records committed by a Merkle root and
// appended by Health Service Authorities in round-robin Proof-of-Authority.

#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dhp/core.hpp"
#include "dhp/crypto.hpp"
#include "dhp/registry.hpp"

namespace dhp {

struct ChainConfig {
  std::uint32_t max_block_records = 1024;
  std::chrono::seconds clock_skew{300};
  // Timestamp of the implicit genesis block (2020-01-01T00:00:00Z).
  UtcSeconds genesis_time = utc_seconds(1577836800);
};

struct BlockHeader {
  std::uint64_t height = 0;
  Digest prev_hash{};
  Digest merkle_root{};
  ActorId authority;
  UtcSeconds block_time{};
  Signature authority_signature;  // not part of header_signing_bytes

  bool operator==(const BlockHeader&) const = default;
};

struct Block {
  BlockHeader header;
  std::vector<HealthPassport> records;

  bool operator==(const Block&) const = default;
};

inline constexpr std::string_view kHeaderTag = "DHPH1|";

// "DHPH1|" ‖ u64 height ‖ prev_hash ‖ merkle_root ‖ u8 role ‖ 16-byte id ‖
// i64 block_time.
Bytes header_signing_bytes(const BlockHeader& header);
Digest header_hash(const BlockHeader& header);

// Header signing bytes ‖ u8 sig len ‖ sig.
Bytes encode_header(const BlockHeader& header);
BlockHeader decode_header(ByteView bytes);

// Header signing bytes ‖ u8 sig len ‖ sig ‖ u32 record count ‖ record frames.
Bytes encode_block(const Block& block);
// Strict inverse of encode_block; throws kDecodeError.
Block decode_block(ByteView bytes);

Digest merkle_leaf(const HealthPassport& record);
// Leaves H("LEAF|" ‖ signing bytes ‖ signature), nodes H("NODE|" ‖ l ‖ r),
// odd layers duplicate their last node, empty input hashes to H("EMPTY|").
Digest merkle_root(std::span<const HealthPassport> records);

// authority_set[height mod |authority_set|]; throws kEmptyAuthoritySet.
const ActorId& scheduled_authority(std::uint64_t height,
                                   std::span<const ActorId> authority_set);

struct RecordLocation {
  std::uint64_t height = 0;
  std::uint32_t index = 0;

  auto operator<=>(const RecordLocation&) const = default;
};

// Held by the traveller; opens exactly one record.
struct DhpToken {
  Digest header_hash{};
  std::uint32_t record_index = 0;
  Salt salt;

  bool operator==(const DhpToken&) const = default;
};

inline constexpr std::size_t kTokenSize = 32 + 4 + 16;
Bytes encode_token(const DhpToken& token);
DhpToken decode_token(ByteView bytes);

enum class ValidationError {
  kWrongHeight,
  kBadPrevHash,
  kWrongAuthority,
  kBadAuthoritySig,
  kBadMerkleRoot,
  kBadRecordCount,
  kUnknownIssuer,
  kBadRecordSig,
  kBadOrdering,
  kDuplicateRecord,
  kBadTimestamp,
};

std::string_view to_string(ValidationError e);

struct DigestHash {
  std::size_t operator()(const Digest& d) const noexcept {
    std::size_t h = 0;
    for (int i = 0; i < 8; ++i) h = (h << 8) | d[i];
    return h;
  }
};

// Replicated chain plus the indexes needed for token lookup. A value type:
// copies share the immutable blocks, so a copy is a consistent snapshot.
class ChainState {
 public:
  // Starts at the implicit genesis block derived from the registry's
  // authority set and `config.genesis_time`. Throws kEmptyAuthoritySet.
  explicit ChainState(std::shared_ptr<const Registry> registry,
                      ChainConfig config = {});

  std::uint64_t height() const { return blocks_.size() - 1; }
  const Block& tip() const { return *blocks_.back(); }
  const Digest& tip_hash() const { return hashes_.back(); }
  const Block& block(std::uint64_t height) const { return *blocks_.at(height); }
  const Digest& block_hash(std::uint64_t height) const { return hashes_.at(height); }
  std::size_t record_count() const { return index_.size(); }

  const Registry& registry() const { return *registry_; }
  std::shared_ptr<const Registry> registry_ptr() const { return registry_; }
  const std::vector<ActorId>& authority_set() const { return authorities_; }
  const ChainConfig& config() const { return config_; }

  std::optional<RecordLocation> locate(const Digest& commitment) const;
  std::optional<std::uint64_t> height_of(const Digest& header_hash) const;
  const HealthPassport& record_at(RecordLocation loc) const {
    return blocks_.at(loc.height)->records.at(loc.index);
  }

  // nullopt when `block` may be appended at local time `now`.
  std::optional<ValidationError> validate(const Block& block, UtcSeconds now) const;
  // Validates then appends; on error the state is unchanged.
  std::optional<ValidationError> append(Block block, UtcSeconds now);

  // Blocks [0, height].
  ChainState prefix(std::uint64_t height) const;

  // Fault injection: a copy with the block at `height` replaced without any
  // validation. Used to model a tampered replica.
  ChainState with_replaced_block_unchecked(std::uint64_t height, Block block) const;

  // Block-for-block equality, signatures included.
  bool same_chain(const ChainState& other) const;

 private:
  void index_block(std::uint64_t height);
  void push(Block block);

  std::shared_ptr<const Registry> registry_;
  ChainConfig config_;
  std::vector<ActorId> authorities_;
  std::vector<std::shared_ptr<const Block>> blocks_;
  std::vector<Digest> hashes_;
  std::unordered_map<Digest, std::uint64_t, DigestHash> height_by_hash_;
  std::unordered_map<Digest, RecordLocation, DigestHash> index_;
};

Block genesis_block(const std::vector<ActorId>& authority_set, UtcSeconds genesis_time);

inline std::optional<ValidationError> validate_block(const ChainState& state,
                                                     const Block& block,
                                                     UtcSeconds now) {
  return state.validate(block, now);
}

inline std::optional<ValidationError> append_block(ChainState& state, Block block,
                                                   UtcSeconds now) {
  return state.append(std::move(block), now);
}

// Builds the next block from `pending` signed by `hsa`. Throws kNotScheduled,
// kEmptyBatch, kBatchTooLarge or kInvalidPendingRecord (detail() = index into
// `pending`).
Block propose_block(const ChainState& state, std::vector<HealthPassport> pending,
                    const KeyPair& hsa, UtcSeconds now);

enum class LookupStatus { kFound, kNotFound, kCommitmentMismatch };

struct LookupResult {
  LookupStatus status = LookupStatus::kNotFound;
  std::optional<RecordLocation> location;  // set unless kNotFound
  std::optional<HealthPassport> record;    // set only when kFound
};

LookupResult lookup_by_token(const ChainState& state, const DhpToken& token,
                             const TravelDocument& doc);

// Longest chain; ties go to the lexicographically smallest tip hash. Throws
// kNoValidCandidate on an empty span.
const ChainState& fork_choice(std::span<const ChainState> candidates);
std::size_t fork_choice_index(std::span<const ChainState* const> candidates);

struct ChainFault {
  std::uint64_t height = 0;
  ValidationError error{};
};

// Replays every block from genesis through validate_block. nullopt when the
// whole chain is valid.
std::optional<ChainFault> revalidate(const ChainState& state, UtcSeconds now);

}  // namespace dhp
