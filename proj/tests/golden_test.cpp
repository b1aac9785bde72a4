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

// Pinned byte-level vectors. Expected values come from
// tests/oracles/golden_vectors.py, which recomputes every layout with
// hashlib and an independent Ed25519 implementation.

#include <gtest/gtest.h>

#include "dhp/protocol.hpp"
#include "fixtures.hpp"

namespace dhp {
namespace {

KeyPair filled_key(std::uint8_t b, Role role) {
  KeySeed seed;
  seed.fill(b);
  return keygen(role, seed);
}

class GoldenTest : public ::testing::Test {
 protected:
  void SetUp() override {
    registry->add({hsa.owner, hsa.public_key, std::nullopt});
    registry->add({thf.owner, thf.public_key, hsa.owner.id});
    registry->add({bm.owner, bm.public_key, std::nullopt});
  }

  PendingDhp first() const {
    return thf_issue(thf, doc_2030, true, TestMethod::from_code("RT-qPCR"),
                     utc_seconds(1600000000), utc_seconds(1600000000), seq_salt);
  }
  PendingDhp second() const {
    return thf_issue(thf, doc_2030, true, TestMethod::from_code("RAT"), utc_seconds(1600000100),
                     utc_seconds(1600000100), Salt{});
  }

  KeyPair hsa = filled_key(0x01, Role::kHsa);
  KeyPair thf = filled_key(0x02, Role::kThf);
  KeyPair bm = filled_key(0x03, Role::kBm);
  std::shared_ptr<Registry> registry = std::make_shared<Registry>();
  TravelDocument doc_epoch{"AB1234567", "GRC", parse_date("1970-01-01")};
  TravelDocument doc_2030{"P12345678", "CYP", parse_date("2030-01-01")};
  Salt seq_salt{{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15}};
};

TEST_F(GoldenTest, DocumentEncodings) {
  EXPECT_EQ(to_hex(canonical_doc_bytes(doc_epoch)), "000941423132333435363747524300000000");
  EXPECT_EQ(to_hex(canonical_doc_bytes(doc_2030)), "00095031323334353637384359500000559b");
}

TEST_F(GoldenTest, Commitments) {
  EXPECT_EQ(to_hex(commit(doc_epoch, Salt{})),
            "d56ba8e0ff352bb46817014ff5a774bb78f5fbe85bc20c0ec379293bd9ec2e87");
  EXPECT_EQ(to_hex(commit(doc_2030, seq_salt)),
            "8d895fe36a48b794da2cdb777af42b5e31d77aa5a505892242da432182ad5b85");
}

TEST_F(GoldenTest, KeysAndMemberIds) {
  EXPECT_EQ(to_hex(hsa.public_key),
            "8a88e3dd7409f195fd52db2d3cba5d72ca6709bf1d94121bf3748801b40f6f5c");
  EXPECT_EQ(to_hex(hsa.owner.id), "109483278f6687b067cc9d4ab97c6783");
  EXPECT_EQ(to_hex(thf.public_key),
            "8139770ea87d175f56a35466c34c7ecccb8d8a91b4ee37a25df60f5b8fc9b394");
  EXPECT_EQ(to_hex(thf.owner.id), "28d37dfac68a6cea9ba8f1f8179c47be");
  EXPECT_EQ(to_hex(bm.owner.id), "63cda6cf0cd868fb619e93c30c1ca4be");
}

TEST_F(GoldenTest, RecordSigningBytesAndSignature) {
  PendingDhp p = first();
  EXPECT_EQ(to_hex(dhp_signing_bytes(p.record)),
            "44485076317c8d895fe36a48b794da2cdb777af42b5e31d77aa5a505892242da432182ad5b85"
            "01000000005f5e10000752542d7150435228d37dfac68a6cea9ba8f1f8179c47be");
  EXPECT_EQ(to_hex(p.record.issuer_signature),
            "c98d3c77b1534a0c91a898ea1163fa9b1d63e9aecc7129a4ff002d02caad6b9a"
            "4a36108456cfdf6cef8c2c356ef208ce34342e62ff40759a1d3ac03f9ce3c308");
}

TEST_F(GoldenTest, MerkleRoots) {
  std::vector<HealthPassport> records = {first().record, second().record};
  std::sort(records.begin(), records.end(),
            [](const auto& a, const auto& b) { return a.commitment < b.commitment; });
  EXPECT_EQ(to_hex(merkle_root({})),
            "b081787bf37c30352f575ee116f36420aa40a9b2413b9760c1a137f24d81a34b");
  EXPECT_EQ(to_hex(merkle_root(records)),
            "f0f0a8dc69fcfa00ce2cf95c16cef11da2b9a12b19253405b910a425620e9bc1");
  records.push_back(first().record);
  EXPECT_EQ(to_hex(merkle_root(records)),
            "580b4c8d8c816c3270cedb8aa7491c2c1837a3eaeff6da91a71e59053f20cf41");
}

TEST_F(GoldenTest, GenesisAndFirstBlock) {
  ChainState state(registry);
  EXPECT_EQ(to_hex(state.tip_hash()),
            "1a1b024fc19fe8c64174f5037020c345972d1b52cee89a9a654174454f79ba7c");
  std::vector<PendingDhp> pending = {first(), second()};
  auto tokens = hsa_register(hsa, state, pending, utc_seconds(1600000200));
  const Block& b = state.tip();
  EXPECT_EQ(to_hex(header_hash(b.header)),
            "128bc59dd2421c2da960787176b7a0f25ae48273468196bd092ce7ee586a57af");
  EXPECT_EQ(to_hex(b.header.authority_signature),
            "c8643a00dd62f33c5e40ba349d65efb842804cd3e4d741a8cc87af033882632e"
            "7aa3e37404774e56754fdc6410ff216abef9dec2c315bf35ddd09f87c691c20a");
  Bytes frame = encode_block(b);
  EXPECT_EQ(frame.size(), 0x1b8u);
  EXPECT_EQ(to_hex(sha256(frame)),
            "dce004f7bc5599b680f220855c9a2e24ba3e3c5bfad9bbb3c439131f4f1fe36a");
  EXPECT_EQ(to_hex(encode_token(tokens[0])),
            "128bc59dd2421c2da960787176b7a0f25ae48273468196bd092ce7ee586a57af"
            "00000001000102030405060708090a0b0c0d0e0f");
}

TEST_F(GoldenTest, Receipt) {
  ChainState state(registry);
  std::vector<PendingDhp> pending = {first(), second()};
  auto tokens = hsa_register(hsa, state, pending, utc_seconds(1600000200));
  auto v = bm_verify(bm, state, tokens[0], doc_2030, testing::default_policy(),
                     utc_seconds(1600003600));
  ASSERT_EQ(v.outcome.status, VerificationStatus::kValid);
  EXPECT_EQ(to_hex(receipt_signing_bytes(v.receipt)),
            "4448505243317c0363cda6cf0cd868fb619e93c30c1ca4be128bc59dd2421c2da960787176b7a0f2"
            "5ae48273468196bd092ce7ee586a57af0000000100000000005f5e1e10");
  EXPECT_EQ(to_hex(v.receipt.bm_signature),
            "5142154d663e6c3229392aea98b78c07b188bad3201597494e7ba0f35fd74776"
            "d35597bc844ff4bd9caca861444edbc8eb568938a904c2b59d7c342fefda8c08");
}

}  // namespace
}  // namespace dhp
