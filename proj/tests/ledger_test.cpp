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

#include <gtest/gtest.h>

#include <algorithm>

#include "dhp/ledger.hpp"
#include "dhp/protocol.hpp"
#include "fixtures.hpp"

namespace dhp {
namespace {

using testing::Consortium;
using testing::Gen;
using testing::kT0;

// Re-signs a hand-edited block, optionally recomputing its Merkle root.
Block seal(Block b, const KeyPair& signer, bool recompute_root = true) {
  if (recompute_root) b.header.merkle_root = merkle_root(b.records);
  b.header.authority = signer.owner;
  b.header.authority_signature = sign(signer, header_signing_bytes(b.header));
  return b;
}

class LedgerTest : public ::testing::Test {
 protected:
  Consortium c{3, 3, 2};
  Gen gen{0x1ed9e7};

  std::vector<HealthPassport> records(std::size_t n, UtcSeconds tested) {
    std::vector<HealthPassport> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(c.issue(i % 3, gen.doc(), tested).record);
    return out;
  }

  Block next_block(const ChainState& s, std::size_t n, UtcSeconds now) {
    return propose_block(s, records(n, now - std::chrono::hours{1}), c.scheduled(s), now);
  }
};

TEST(MerkleRoot, EmptyAndSingle) {
  EXPECT_EQ(merkle_root({}), sha256(as_bytes("EMPTY|")));
  Consortium c(1, 1, 0);
  HealthPassport r = c.issue(0, Gen(1).doc(), kT0).record;
  std::vector<HealthPassport> one = {r};
  EXPECT_EQ(merkle_root(one), merkle_leaf(r));
  EXPECT_EQ(merkle_leaf(r), sha256({as_bytes("LEAF|"), dhp_signing_bytes(r), r.issuer_signature}));
}

TEST(MerkleRoot, TwoAndThreeLeavesByHand) {
  Consortium c(1, 1, 0);
  Gen gen(2);
  std::vector<HealthPassport> rs;
  for (int i = 0; i < 3; ++i) rs.push_back(c.issue(0, gen.doc(), kT0).record);
  auto node = [](const Digest& l, const Digest& r) {
    return sha256({as_bytes("NODE|"), l, r});
  };
  Digest l0 = merkle_leaf(rs[0]), l1 = merkle_leaf(rs[1]), l2 = merkle_leaf(rs[2]);
  EXPECT_EQ(merkle_root(std::span(rs).first(2)), node(l0, l1));
  EXPECT_EQ(merkle_root(rs), node(node(l0, l1), node(l2, l2)));
}

TEST(HeaderHash, StableAndHeightSensitive) {
  BlockHeader h;
  h.height = 4;
  h.block_time = kT0;
  BlockHeader same = h;
  same.authority_signature = Bytes(64, 1);  // excluded from the hash
  EXPECT_EQ(header_hash(h), header_hash(same));
  BlockHeader taller = h;
  taller.height = 5;
  EXPECT_NE(header_hash(h), header_hash(taller));
}

TEST(HeaderFrame, RoundTrip) {
  BlockHeader h;
  h.height = 9;
  h.prev_hash.fill(3);
  h.merkle_root.fill(4);
  h.authority = ActorId{Role::kHsa, MemberId{1, 2, 3}};
  h.block_time = kT0;
  h.authority_signature = Bytes(64, 0x55);
  EXPECT_EQ(decode_header(encode_header(h)), h);
  Bytes extra = encode_header(h);
  extra.push_back(0);
  EXPECT_DHP_ERROR(decode_header(extra), ErrorCode::kDecodeError);
}

TEST(ScheduledAuthority, RoundRobin) {
  std::vector<ActorId> three = {{Role::kHsa, MemberId{1}}, {Role::kHsa, MemberId{2}},
                                {Role::kHsa, MemberId{3}}};
  EXPECT_EQ(scheduled_authority(0, three), three[0]);
  EXPECT_EQ(scheduled_authority(5, three), three[2]);
  std::vector<ActorId> one = {three[1]};
  EXPECT_EQ(scheduled_authority(7, one), one[0]);
  EXPECT_DHP_ERROR(scheduled_authority(1, {}), ErrorCode::kEmptyAuthoritySet);
}

TEST_F(LedgerTest, GenesisIsImplicit) {
  ChainState s = c.chain();
  EXPECT_EQ(s.height(), 0u);
  EXPECT_EQ(s.tip().header.prev_hash, Digest{});
  EXPECT_EQ(s.tip().header.authority, c.hsas[0].owner);
  EXPECT_EQ(s.tip().header.block_time, ChainConfig{}.genesis_time);
  EXPECT_TRUE(s.tip().records.empty());
}

TEST_F(LedgerTest, ProposeOnGenesisValidates) {
  ChainState s = c.chain();
  Block b = next_block(s, 1, kT0);
  EXPECT_EQ(b.header.height, 1u);
  EXPECT_EQ(b.header.prev_hash, s.tip_hash());
  EXPECT_EQ(b.header.block_time, kT0);
  EXPECT_EQ(validate_block(s, b, kT0), std::nullopt);
}

TEST_F(LedgerTest, ProposeSortsRecords) {
  ChainState s = c.chain();
  auto rs = records(20, kT0);
  Block b = propose_block(s, rs, c.scheduled(s), kT0);
  EXPECT_TRUE(std::is_sorted(b.records.begin(), b.records.end(),
                             [](auto& x, auto& y) { return x.commitment < y.commitment; }));
}

TEST_F(LedgerTest, ProposeErrors) {
  ChainState s = c.chain();
  auto rs = records(3, kT0);
  EXPECT_DHP_ERROR(propose_block(s, rs, c.hsas[2], kT0), ErrorCode::kNotScheduled);
  EXPECT_DHP_ERROR(propose_block(s, {}, c.scheduled(s), kT0), ErrorCode::kEmptyBatch);

  auto tampered = rs;
  tampered[1].issuer_signature[5] ^= 0x10;
  try {
    propose_block(s, tampered, c.scheduled(s), kT0);
    ADD_FAILURE() << "tampered record accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidPendingRecord);
    EXPECT_EQ(e.detail(), 1u);
  }

  auto dup = rs;
  dup.push_back(rs[0]);
  EXPECT_DHP_ERROR(propose_block(s, dup, c.scheduled(s), kT0), ErrorCode::kInvalidPendingRecord);

  ChainConfig small;
  small.max_block_records = 2;
  ChainState limited(c.registry, small);
  EXPECT_DHP_ERROR(propose_block(limited, rs, c.scheduled(limited), kT0),
                   ErrorCode::kBatchTooLarge);
}

TEST_F(LedgerTest, ProposeRejectsRecordsAlreadyOnChain) {
  ChainState s = c.chain();
  Block b = next_block(s, 2, kT0);
  auto again = b.records;
  ASSERT_EQ(s.append(std::move(b), kT0), std::nullopt);
  EXPECT_DHP_ERROR(propose_block(s, again, c.scheduled(s), kT0 + std::chrono::seconds{10}),
                   ErrorCode::kInvalidPendingRecord);
}

class ValidateTest : public LedgerTest {
 protected:
  void SetUp() override {
    ASSERT_EQ(s.append(next_block(s, 2, kT0), kT0), std::nullopt);
    good = next_block(s, 3, now);
    ASSERT_EQ(validate_block(s, good, now), std::nullopt);
  }
  std::optional<ValidationError> check(const Block& b) { return validate_block(s, b, now); }
  const KeyPair& signer() { return c.scheduled(s); }

  ChainState s = c.chain();
  UtcSeconds now = kT0 + std::chrono::minutes{5};
  Block good;
};

TEST_F(ValidateTest, WrongHeight) {
  Block b = good;
  b.header.height = 3;
  EXPECT_EQ(check(seal(b, signer())), ValidationError::kWrongHeight);
}

TEST_F(ValidateTest, BadPrevHash) {
  Block b = good;
  b.header.prev_hash[0] ^= 1;
  EXPECT_EQ(check(seal(b, signer())), ValidationError::kBadPrevHash);
}

TEST_F(ValidateTest, BlockSignedByBmIsWrongAuthority) {
  EXPECT_EQ(check(seal(good, c.bms[0])), ValidationError::kWrongAuthority);
}

TEST_F(ValidateTest, UnscheduledHsaIsWrongAuthority) {
  EXPECT_EQ(check(seal(good, c.hsas[0])), ValidationError::kWrongAuthority);
}

TEST_F(ValidateTest, BadAuthoritySig) {
  Block b = good;
  b.header.authority_signature[0] ^= 1;
  EXPECT_EQ(check(b), ValidationError::kBadAuthoritySig);
  // Right name, wrong key.
  Block forged = good;
  forged.header.authority_signature = sign(c.hsas[0], header_signing_bytes(good.header));
  EXPECT_EQ(check(forged), ValidationError::kBadAuthoritySig);
}

TEST_F(ValidateTest, ZeroedMerkleRoot) {
  Block b = good;
  b.header.merkle_root = Digest{};
  EXPECT_EQ(check(seal(b, signer(), false)), ValidationError::kBadMerkleRoot);
}

TEST_F(ValidateTest, EmptyBlockIsBadRecordCount) {
  Block b = good;
  b.records.clear();
  EXPECT_EQ(check(seal(b, signer())), ValidationError::kBadRecordCount);
}

TEST_F(ValidateTest, UnknownIssuer) {
  KeyPair rogue = keygen(Role::kThf, testing::seed_of(0x77, 1));
  Block b = good;
  b.records[1] = thf_issue(rogue, gen.doc(), true, TestMethod::from_code("RAT"), kT0, kT0).record;
  std::sort(b.records.begin(), b.records.end(),
            [](auto& x, auto& y) { return x.commitment < y.commitment; });
  EXPECT_EQ(check(seal(b, signer())), ValidationError::kUnknownIssuer);
}

TEST_F(ValidateTest, BadRecordSig) {
  Block b = good;
  b.records[2].issuer_signature[63] ^= 0x80;
  EXPECT_EQ(check(seal(b, signer())), ValidationError::kBadRecordSig);
}

TEST_F(ValidateTest, BadOrdering) {
  Block b = good;
  std::swap(b.records[0], b.records[2]);
  EXPECT_EQ(check(seal(b, signer())), ValidationError::kBadOrdering);
  Block twice = good;
  twice.records[1] = twice.records[0];
  EXPECT_EQ(check(seal(twice, signer())), ValidationError::kBadOrdering);
}

TEST_F(ValidateTest, RecordAlreadyOnChain) {
  Block b = good;
  b.records[0] = s.block(1).records[0];
  std::sort(b.records.begin(), b.records.end(),
            [](auto& x, auto& y) { return x.commitment < y.commitment; });
  EXPECT_EQ(check(seal(b, signer())), ValidationError::kDuplicateRecord);
}

TEST_F(ValidateTest, Timestamps) {
  Block early = good;
  early.header.block_time = s.tip().header.block_time - std::chrono::seconds{1};
  EXPECT_EQ(check(seal(early, signer())), ValidationError::kBadTimestamp);

  Block same = good;
  same.header.block_time = s.tip().header.block_time;
  EXPECT_EQ(check(seal(same, signer())), std::nullopt);

  Block skew = good;
  skew.header.block_time = now + std::chrono::seconds{300};
  EXPECT_EQ(check(seal(skew, signer())), std::nullopt);
  skew.header.block_time = now + std::chrono::seconds{301};
  EXPECT_EQ(check(seal(skew, signer())), ValidationError::kBadTimestamp);

  Block future_test = good;
  future_test.records = {c.issue(0, gen.doc(), now + std::chrono::seconds{301}).record};
  EXPECT_EQ(check(seal(future_test, signer())), ValidationError::kBadTimestamp);
}

TEST_F(ValidateTest, FirstFailureWins) {
  Block b = good;
  b.header.height = 9;
  b.header.prev_hash = Digest{};
  b.header.merkle_root = Digest{};
  b.records.clear();
  EXPECT_EQ(check(seal(b, c.bms[0], false)), ValidationError::kWrongHeight);
  b.header.height = 2;
  EXPECT_EQ(check(seal(b, c.bms[0], false)), ValidationError::kBadPrevHash);
  b.header.prev_hash = s.tip_hash();
  EXPECT_EQ(check(seal(b, c.bms[0], false)), ValidationError::kWrongAuthority);
  EXPECT_EQ(check(seal(b, signer(), false)), ValidationError::kBadMerkleRoot);
  EXPECT_EQ(check(seal(b, signer(), true)), ValidationError::kBadRecordCount);
}

TEST_F(LedgerTest, AppendThenLookupEveryRecord) {
  ChainState s = c.chain();
  Block b = next_block(s, 5, kT0);
  auto rs = b.records;
  ASSERT_EQ(s.append(std::move(b), kT0), std::nullopt);
  for (std::uint32_t i = 0; i < rs.size(); ++i) {
    auto loc = s.locate(rs[i].commitment);
    ASSERT_TRUE(loc);
    EXPECT_EQ(*loc, (RecordLocation{1, i}));
    EXPECT_EQ(s.record_at(*loc), rs[i]);
  }
}

TEST_F(LedgerTest, InvalidAppendLeavesStateUnchanged) {
  ChainState s = c.chain();
  ASSERT_EQ(s.append(next_block(s, 2, kT0), kT0), std::nullopt);
  ChainState before = s;
  Block bad = next_block(s, 2, kT0);
  bad.header.merkle_root = Digest{};
  EXPECT_EQ(append_block(s, bad, kT0), ValidationError::kBadAuthoritySig);
  EXPECT_TRUE(s.same_chain(before));
  EXPECT_EQ(s.record_count(), before.record_count());
}

TEST_F(LedgerTest, HundredAppendsRevalidateAtEveryPrefix) {
  ChainState s = c.chain();
  UtcSeconds now = kT0;
  for (int i = 0; i < 100; ++i) {
    now += std::chrono::seconds{30};
    ASSERT_EQ(s.append(next_block(s, 1 + gen.below(4), now), now), std::nullopt) << i;
  }
  // Independent oracle: walk the hash links and heights directly, then replay.
  for (std::uint64_t h = 1; h <= s.height(); ++h) {
    ASSERT_EQ(s.block(h).header.height, h);
    ASSERT_EQ(s.block(h).header.prev_hash, header_hash(s.block(h - 1).header));
    ASSERT_EQ(s.block_hash(h), header_hash(s.block(h).header));
  }
  for (std::uint64_t h = 0; h <= s.height(); h += 7) {
    ASSERT_EQ(revalidate(s.prefix(h), now), std::nullopt) << "prefix " << h;
  }
  ASSERT_EQ(revalidate(s, now), std::nullopt);
}

TEST_F(LedgerTest, EarlierBlocksNeverChange) {
  ChainState s = c.chain();
  std::vector<Bytes> frozen;
  UtcSeconds now = kT0;
  for (int i = 0; i < 30; ++i) {
    now += std::chrono::seconds{10};
    ASSERT_EQ(s.append(next_block(s, 2, now), now), std::nullopt);
    frozen.push_back(encode_block(s.tip()));
    for (std::size_t h = 0; h < frozen.size(); ++h) {
      ASSERT_EQ(encode_block(s.block(h + 1)), frozen[h]) << "block " << h + 1 << " changed";
    }
  }
}

TEST_F(LedgerTest, IndexIsSoundAndComplete) {
  ChainState s = c.chain();
  UtcSeconds now = kT0;
  std::size_t total = 0;
  for (int i = 0; i < 20; ++i) {
    now += std::chrono::seconds{10};
    std::size_t n = 1 + gen.below(8);
    total += n;
    ASSERT_EQ(s.append(next_block(s, n, now), now), std::nullopt);
  }
  EXPECT_EQ(s.record_count(), total);
  for (std::uint64_t h = 1; h <= s.height(); ++h) {
    const auto& rs = s.block(h).records;
    for (std::uint32_t i = 0; i < rs.size(); ++i) {
      auto loc = s.locate(rs[i].commitment);
      ASSERT_TRUE(loc);
      EXPECT_EQ(*loc, (RecordLocation{h, i}));
      EXPECT_EQ(s.record_at(*loc).commitment, rs[i].commitment);
    }
  }
}

TEST_F(LedgerTest, RevalidateFindsTamperedBlock) {
  ChainState s = c.chain();
  UtcSeconds now = kT0;
  for (int i = 0; i < 5; ++i) {
    now += std::chrono::seconds{10};
    ASSERT_EQ(s.append(next_block(s, 2, now), now), std::nullopt);
  }
  Block altered = s.block(3);
  altered.records[0].result = !altered.records[0].result;
  auto fault = revalidate(s.with_replaced_block_unchecked(3, altered), now);
  ASSERT_TRUE(fault);
  EXPECT_EQ(fault->height, 3u);
  EXPECT_EQ(fault->error, ValidationError::kBadMerkleRoot);
}

TEST_F(LedgerTest, AuthorityExclusivityUnderRandomRoles) {
  // Keys of random roles try to extend the chain; only the scheduled HSA may.
  for (int trial = 0; trial < 200; ++trial) {
    ChainState s = c.chain();
    ASSERT_EQ(s.append(next_block(s, 1, kT0), kT0), std::nullopt);
    Block b = next_block(s, 1, kT0);
    const KeyPair* signer = nullptr;
    switch (gen.below(4)) {
      case 0: signer = &c.thfs[gen.below(3)]; break;
      case 1: signer = &c.bms[gen.below(2)]; break;
      default: signer = &c.hsas[gen.below(3)]; break;
    }
    auto err = validate_block(s, seal(b, *signer), kT0);
    const bool scheduled = signer->owner == c.scheduled(s).owner;
    ASSERT_EQ(!err.has_value(), scheduled) << "trial " << trial;
    if (!scheduled) {
      ASSERT_EQ(err, ValidationError::kWrongAuthority);
    }
  }
}

TEST_F(LedgerTest, LookupByToken) {
  ChainState s = c.chain();
  TravelDocument doc = gen.doc();
  TravelDocument other = gen.doc();
  std::vector<PendingDhp> p = {c.issue(0, doc, kT0), c.issue(1, gen.doc(), kT0)};
  auto tokens = c.register_batch(s, p, kT0);

  auto found = lookup_by_token(s, tokens[0], doc);
  EXPECT_EQ(found.status, LookupStatus::kFound);
  ASSERT_TRUE(found.record);
  EXPECT_EQ(*found.record, p[0].record);

  auto mismatch = lookup_by_token(s, tokens[0], other);
  EXPECT_EQ(mismatch.status, LookupStatus::kCommitmentMismatch);
  EXPECT_TRUE(mismatch.location);
  EXPECT_FALSE(mismatch.record);

  DhpToken unknown = tokens[0];
  unknown.header_hash[0] ^= 1;
  EXPECT_EQ(lookup_by_token(s, unknown, doc).status, LookupStatus::kNotFound);
  DhpToken past_end = tokens[0];
  past_end.record_index = 2;
  EXPECT_EQ(lookup_by_token(s, past_end, doc).status, LookupStatus::kNotFound);
}

TEST(Token, EncodingRoundTrip) {
  DhpToken t;
  t.header_hash.fill(0xaa);
  t.record_index = 0x01020304;
  t.salt.value.fill(0x5c);
  Bytes b = encode_token(t);
  ASSERT_EQ(b.size(), kTokenSize);
  EXPECT_EQ(b[32], 0x01);
  EXPECT_EQ(b[35], 0x04);
  EXPECT_EQ(decode_token(b), t);
  b.pop_back();
  EXPECT_DHP_ERROR(decode_token(b), ErrorCode::kDecodeError);
}

TEST_F(LedgerTest, BlockFrameIsStrict) {
  ChainState s = c.chain();
  Block b = next_block(s, 3, kT0);
  Bytes frame = encode_block(b);
  EXPECT_EQ(decode_block(frame), b);
  Bytes longer = frame;
  longer.push_back(0);
  EXPECT_DHP_ERROR(decode_block(longer), ErrorCode::kDecodeError);
  for (std::size_t cut : {std::size_t{0}, std::size_t{10}, frame.size() - 1}) {
    EXPECT_DHP_ERROR(decode_block(ByteView(frame).first(cut)), ErrorCode::kDecodeError);
  }
  // A count that claims more records than the frame could hold.
  Bytes huge = encode_header(b.header);
  ByteWriter w;
  w.put(huge).put_u32(0xffffffff);
  EXPECT_DHP_ERROR(decode_block(w.bytes()), ErrorCode::kDecodeError);
}

class ForkChoiceTest : public LedgerTest {
 protected:
  ChainState grow(ChainState s, int blocks, UtcSeconds start) {
    for (int i = 0; i < blocks; ++i) {
      UtcSeconds t = start + std::chrono::seconds{i};
      EXPECT_EQ(s.append(next_block(s, 1, t), t), std::nullopt);
    }
    return s;
  }
};

TEST_F(ForkChoiceTest, LongestWins) {
  ChainState five = grow(c.chain(), 5, kT0);
  ChainState three = grow(c.chain(), 3, kT0);
  std::vector<ChainState> v = {three, five};
  EXPECT_TRUE(fork_choice(v).same_chain(five));
}

TEST_F(ForkChoiceTest, TieGoesToSmallestTipHash) {
  ChainState a = grow(c.chain(), 2, kT0);
  ChainState b = grow(c.chain(), 2, kT0 + std::chrono::seconds{100});
  ASSERT_NE(a.tip_hash(), b.tip_hash());
  const ChainState& smaller = a.tip_hash() < b.tip_hash() ? a : b;
  std::vector<ChainState> v = {a, b};
  EXPECT_TRUE(fork_choice(v).same_chain(smaller));
  std::vector<ChainState> w = {b, a};
  EXPECT_TRUE(fork_choice(w).same_chain(smaller));
}

TEST_F(ForkChoiceTest, SingleAndEmpty) {
  ChainState one = grow(c.chain(), 1, kT0);
  std::vector<ChainState> v = {one};
  EXPECT_TRUE(fork_choice(v).same_chain(one));
  EXPECT_DHP_ERROR(fork_choice(std::span<const ChainState>{}), ErrorCode::kNoValidCandidate);
}

TEST_F(ForkChoiceTest, PermutationInvariant) {
  std::vector<ChainState> pool;
  for (int i = 0; i < 6; ++i) {
    pool.push_back(grow(c.chain(), 1 + gen.below(4), kT0 + std::chrono::seconds{17 * i}));
  }
  const ChainState& chosen = fork_choice(pool);
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), 0);
  for (int perm = 0; perm < 200; ++perm) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[gen.below(i)]);
    std::vector<ChainState> shuffled;
    for (auto i : order) shuffled.push_back(pool[i]);
    ASSERT_TRUE(fork_choice(shuffled).same_chain(chosen));
  }
}

TEST_F(LedgerTest, SameChainComparesContent) {
  ChainState a = c.chain();
  ASSERT_EQ(a.append(next_block(a, 2, kT0), kT0), std::nullopt);
  ChainState b = a;
  EXPECT_TRUE(a.same_chain(b));
  ASSERT_EQ(b.append(next_block(b, 1, kT0), kT0), std::nullopt);
  EXPECT_FALSE(a.same_chain(b));
  // Same headers, one record body altered.
  Block altered = a.block(1);
  altered.records[0].issuer_signature[0] ^= 1;
  EXPECT_FALSE(a.same_chain(a.with_replaced_block_unchecked(1, altered)));
}

}  // namespace
}  // namespace dhp
