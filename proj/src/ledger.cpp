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

#include "dhp/ledger.hpp"

#include <algorithm>

namespace dhp {

namespace {

void put_actor(ByteWriter& out, const ActorId& actor) {
  out.put_u8(static_cast<std::uint8_t>(actor.role)).put(actor.id);
}

ActorId get_actor(ByteReader& in) {
  ActorId actor;
  actor.role = role_from_byte(in.u8());
  actor.id = in.fixed<16>();
  return actor;
}

BlockHeader read_header(ByteReader& in) {
  BlockHeader h;
  in.expect(kHeaderTag);
  h.height = in.u64();
  h.prev_hash = in.fixed<32>();
  h.merkle_root = in.fixed<32>();
  h.authority = get_actor(in);
  h.block_time = utc_seconds(in.i64());
  ByteView sig = in.take(in.u8());
  h.authority_signature.assign(sig.begin(), sig.end());
  return h;
}

bool verify_record_signature(const Registry& registry, const HealthPassport& r) {
  const Member* issuer = registry.find(ActorId{Role::kThf, r.issuer_id});
  if (issuer == nullptr) return false;
  try {
    return verify_sig(issuer->public_key, dhp_signing_bytes(r), r.issuer_signature);
  } catch (const Error&) {
    return false;
  }
}

}  // namespace

Bytes header_signing_bytes(const BlockHeader& header) {
  ByteWriter out;
  out.put(kHeaderTag).put_u64(header.height).put(header.prev_hash).put(header.merkle_root);
  put_actor(out, header.authority);
  out.put_i64(to_unix(header.block_time));
  return std::move(out).bytes();
}

Digest header_hash(const BlockHeader& header) {
  return sha256(header_signing_bytes(header));
}

Bytes encode_header(const BlockHeader& header) {
  const auto& sig = header.authority_signature;
  if (sig.size() > 255) throw Error(ErrorCode::kEncodingError, "signature exceeds 255 bytes");
  ByteWriter out;
  out.put(header_signing_bytes(header)).put_u8(static_cast<std::uint8_t>(sig.size())).put(sig);
  return std::move(out).bytes();
}

BlockHeader decode_header(ByteView bytes) {
  ByteReader in(bytes);
  BlockHeader h = read_header(in);
  in.finish();
  return h;
}

Bytes encode_block(const Block& block) {
  ByteWriter out;
  out.put(encode_header(block.header)).put_u32(static_cast<std::uint32_t>(block.records.size()));
  for (const auto& r : block.records) encode_record(out, r);
  return std::move(out).bytes();
}

Block decode_block(ByteView bytes) {
  ByteReader in(bytes);
  Block block;
  block.header = read_header(in);
  std::uint32_t count = in.u32();
  // Each record frame is at least 6 + 32 + 1 + 8 + 2 + 16 + 1 bytes.
  if (count > in.remaining() / 66) {
    throw Error(ErrorCode::kDecodeError, "record count exceeds frame size");
  }
  block.records.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) block.records.push_back(decode_record(in));
  in.finish();
  return block;
}

Digest merkle_leaf(const HealthPassport& record) {
  return sha256({as_bytes("LEAF|"), dhp_signing_bytes(record), record.issuer_signature});
}

Digest merkle_root(std::span<const HealthPassport> records) {
  if (records.empty()) return sha256(as_bytes("EMPTY|"));
  std::vector<Digest> layer;
  layer.reserve(records.size());
  for (const auto& r : records) layer.push_back(merkle_leaf(r));
  while (layer.size() > 1) {
    if (layer.size() % 2 == 1) layer.push_back(layer.back());
    std::vector<Digest> next;
    next.reserve(layer.size() / 2);
    for (std::size_t i = 0; i < layer.size(); i += 2) {
      next.push_back(sha256({as_bytes("NODE|"), layer[i], layer[i + 1]}));
    }
    layer = std::move(next);
  }
  return layer.front();
}

const ActorId& scheduled_authority(std::uint64_t height,
                                   std::span<const ActorId> authority_set) {
  if (authority_set.empty()) {
    throw Error(ErrorCode::kEmptyAuthoritySet, "no HSA in the authority set");
  }
  return authority_set[height % authority_set.size()];
}

Bytes encode_token(const DhpToken& token) {
  ByteWriter out;
  out.put(token.header_hash).put_u32(token.record_index).put(token.salt.value);
  return std::move(out).bytes();
}

DhpToken decode_token(ByteView bytes) {
  ByteReader in(bytes);
  DhpToken token;
  token.header_hash = in.fixed<32>();
  token.record_index = in.u32();
  token.salt.value = in.fixed<16>();
  in.finish();
  return token;
}

std::string_view to_string(ValidationError e) {
  switch (e) {
    case ValidationError::kWrongHeight: return "WrongHeight";
    case ValidationError::kBadPrevHash: return "BadPrevHash";
    case ValidationError::kWrongAuthority: return "WrongAuthority";
    case ValidationError::kBadAuthoritySig: return "BadAuthoritySig";
    case ValidationError::kBadMerkleRoot: return "BadMerkleRoot";
    case ValidationError::kBadRecordCount: return "BadRecordCount";
    case ValidationError::kUnknownIssuer: return "UnknownIssuer";
    case ValidationError::kBadRecordSig: return "BadRecordSig";
    case ValidationError::kBadOrdering: return "BadOrdering";
    case ValidationError::kDuplicateRecord: return "DuplicateRecord";
    case ValidationError::kBadTimestamp: return "BadTimestamp";
  }
  return "Unknown";
}

Block genesis_block(const std::vector<ActorId>& authority_set, UtcSeconds genesis_time) {
  Block genesis;
  genesis.header.height = 0;
  genesis.header.merkle_root = merkle_root({});
  genesis.header.authority = scheduled_authority(0, authority_set);
  genesis.header.block_time = genesis_time;
  return genesis;
}

ChainState::ChainState(std::shared_ptr<const Registry> registry, ChainConfig config)
    : registry_(std::move(registry)),
      config_(config),
      authorities_(registry_->authorities()) {
  push(genesis_block(authorities_, config_.genesis_time));
}

void ChainState::push(Block block) {
  Digest hash = header_hash(block.header);
  blocks_.push_back(std::make_shared<const Block>(std::move(block)));
  hashes_.push_back(hash);
  height_by_hash_[hash] = blocks_.size() - 1;
  index_block(blocks_.size() - 1);
}

void ChainState::index_block(std::uint64_t height) {
  const auto& records = blocks_[height]->records;
  for (std::uint32_t i = 0; i < records.size(); ++i) {
    index_[records[i].commitment] = RecordLocation{height, i};
  }
}

std::optional<RecordLocation> ChainState::locate(const Digest& commitment) const {
  auto it = index_.find(commitment);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::uint64_t> ChainState::height_of(const Digest& hash) const {
  auto it = height_by_hash_.find(hash);
  if (it == height_by_hash_.end()) return std::nullopt;
  return it->second;
}

std::optional<ValidationError> ChainState::validate(const Block& block,
                                                    UtcSeconds now) const {
  const BlockHeader& h = block.header;
  if (h.height != height() + 1) return ValidationError::kWrongHeight;
  if (h.prev_hash != tip_hash()) return ValidationError::kBadPrevHash;
  if (h.authority != scheduled_authority(h.height, authorities_)) {
    return ValidationError::kWrongAuthority;
  }
  const Member* authority = registry_->find(h.authority);
  if (authority == nullptr ||
      !verify_sig(authority->public_key, header_signing_bytes(h), h.authority_signature)) {
    return ValidationError::kBadAuthoritySig;
  }
  if (merkle_root(block.records) != h.merkle_root) return ValidationError::kBadMerkleRoot;
  if (block.records.empty() || block.records.size() > config_.max_block_records) {
    return ValidationError::kBadRecordCount;
  }
  for (const auto& r : block.records) {
    if (registry_->find(ActorId{Role::kThf, r.issuer_id}) == nullptr) {
      return ValidationError::kUnknownIssuer;
    }
  }
  for (const auto& r : block.records) {
    if (!verify_record_signature(*registry_, r)) return ValidationError::kBadRecordSig;
  }
  for (std::size_t i = 1; i < block.records.size(); ++i) {
    if (!(block.records[i - 1].commitment < block.records[i].commitment)) {
      return ValidationError::kBadOrdering;
    }
  }
  for (const auto& r : block.records) {
    if (index_.contains(r.commitment)) return ValidationError::kDuplicateRecord;
  }
  if (h.block_time < tip().header.block_time || h.block_time > now + config_.clock_skew) {
    return ValidationError::kBadTimestamp;
  }
  for (const auto& r : block.records) {
    if (r.tested_at > h.block_time + config_.clock_skew) return ValidationError::kBadTimestamp;
  }
  return std::nullopt;
}

std::optional<ValidationError> ChainState::append(Block block, UtcSeconds now) {
  if (auto err = validate(block, now)) return err;
  push(std::move(block));
  return std::nullopt;
}

ChainState ChainState::prefix(std::uint64_t h) const {
  ChainState out = *this;
  if (h >= height()) return out;
  out.blocks_.resize(h + 1);
  out.hashes_.resize(h + 1);
  out.height_by_hash_.clear();
  out.index_.clear();
  for (std::uint64_t i = 0; i <= h; ++i) {
    out.height_by_hash_[out.hashes_[i]] = i;
    out.index_block(i);
  }
  return out;
}

ChainState ChainState::with_replaced_block_unchecked(std::uint64_t h, Block block) const {
  ChainState out = *this;
  for (const auto& r : out.blocks_.at(h)->records) out.index_.erase(r.commitment);
  out.height_by_hash_.erase(out.hashes_[h]);
  out.hashes_[h] = header_hash(block.header);
  out.height_by_hash_[out.hashes_[h]] = h;
  out.blocks_[h] = std::make_shared<const Block>(std::move(block));
  out.index_block(h);
  return out;
}

bool ChainState::same_chain(const ChainState& other) const {
  if (hashes_ != other.hashes_) return false;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    if (blocks_[i] != other.blocks_[i] && !(*blocks_[i] == *other.blocks_[i])) return false;
  }
  return true;
}

Block propose_block(const ChainState& state, std::vector<HealthPassport> pending,
                    const KeyPair& hsa, UtcSeconds now) {
  const std::uint64_t next = state.height() + 1;
  if (hsa.owner != scheduled_authority(next, state.authority_set())) {
    throw Error(ErrorCode::kNotScheduled,
                "HSA " + to_hex(hsa.owner.id) + " is not scheduled for height " +
                    std::to_string(next));
  }
  if (pending.empty()) throw Error(ErrorCode::kEmptyBatch, "no pending records");
  if (pending.size() > state.config().max_block_records) {
    throw Error(ErrorCode::kBatchTooLarge,
                std::to_string(pending.size()) + " records exceed the block limit");
  }
  for (std::size_t i = 0; i < pending.size(); ++i) {
    const auto& r = pending[i];
    if (!verify_record_signature(state.registry(), r) || state.locate(r.commitment)) {
      throw Error(ErrorCode::kInvalidPendingRecord,
                  "pending record " + std::to_string(i) + " is invalid", i);
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (pending[j].commitment == r.commitment) {
        throw Error(ErrorCode::kInvalidPendingRecord,
                    "pending record " + std::to_string(i) + " duplicates " + std::to_string(j), i);
      }
    }
  }
  std::sort(pending.begin(), pending.end(),
            [](const HealthPassport& a, const HealthPassport& b) {
              return a.commitment < b.commitment;
            });
  Block block;
  block.header.height = next;
  block.header.prev_hash = state.tip_hash();
  block.header.merkle_root = merkle_root(pending);
  block.header.authority = hsa.owner;
  block.header.block_time = now;
  block.header.authority_signature = sign(hsa, header_signing_bytes(block.header));
  block.records = std::move(pending);
  return block;
}

LookupResult lookup_by_token(const ChainState& state, const DhpToken& token,
                             const TravelDocument& doc) {
  LookupResult out;
  auto height = state.height_of(token.header_hash);
  if (!height) return out;
  const Block& block = state.block(*height);
  if (token.record_index >= block.records.size()) return out;
  out.location = RecordLocation{*height, token.record_index};
  const HealthPassport& record = block.records[token.record_index];
  if (!opens(record.commitment, doc, token.salt)) {
    out.status = LookupStatus::kCommitmentMismatch;
    return out;
  }
  out.status = LookupStatus::kFound;
  out.record = record;
  return out;
}

std::size_t fork_choice_index(std::span<const ChainState* const> candidates) {
  if (candidates.empty()) {
    throw Error(ErrorCode::kNoValidCandidate, "no candidate chains");
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const ChainState& c = *candidates[i];
    const ChainState& b = *candidates[best];
    if (c.height() > b.height() ||
        (c.height() == b.height() && c.tip_hash() < b.tip_hash())) {
      best = i;
    }
  }
  return best;
}

const ChainState& fork_choice(std::span<const ChainState> candidates) {
  std::vector<const ChainState*> ptrs;
  ptrs.reserve(candidates.size());
  for (const auto& c : candidates) ptrs.push_back(&c);
  return candidates[fork_choice_index(ptrs)];
}

std::optional<ChainFault> revalidate(const ChainState& state, UtcSeconds now) {
  ChainState replay(state.registry_ptr(), state.config());
  if (!(state.block(0) == replay.block(0))) {
    return ChainFault{0, ValidationError::kBadPrevHash};
  }
  for (std::uint64_t h = 1; h <= state.height(); ++h) {
    if (auto err = replay.append(state.block(h), now)) return ChainFault{h, *err};
  }
  return std::nullopt;
}

}  // namespace dhp
