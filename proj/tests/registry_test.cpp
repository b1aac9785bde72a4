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

#include "dhp/registry.hpp"
#include "fixtures.hpp"

namespace dhp {
namespace {

using testing::Consortium;
using testing::seed_of;

TEST(Registry, FindByIdAndRole) {
  Consortium c(2, 2, 1);
  const Member* m = c.registry->find(c.thfs[1].owner);
  ASSERT_NE(m, nullptr);
  EXPECT_EQ(m->public_key, c.thfs[1].public_key);
  EXPECT_EQ(m->home_hsa, c.hsas[1].owner.id);
  ActorId wrong_role{Role::kBm, c.thfs[1].owner.id};
  EXPECT_EQ(c.registry->find(wrong_role), nullptr);
  EXPECT_NE(c.registry->find(c.thfs[1].owner.id), nullptr);
  EXPECT_EQ(c.registry->find(MemberId{}), nullptr);
}

TEST(Registry, AuthoritiesFollowInsertionOrder) {
  Registry r;
  std::vector<ActorId> expected;
  for (std::uint32_t i : {5u, 1u, 3u}) {
    KeyPair k = keygen(Role::kHsa, seed_of(9, i));
    r.add({k.owner, k.public_key, std::nullopt});
    expected.push_back(k.owner);
    KeyPair bm = keygen(Role::kBm, seed_of(10, i));
    r.add({bm.owner, bm.public_key, std::nullopt});
  }
  EXPECT_EQ(r.authorities(), expected);
}

TEST(Registry, RejectsBadMembers) {
  Consortium c(1, 0, 1);
  Registry r = *c.registry;
  EXPECT_DHP_ERROR(r.add({c.hsas[0].owner, c.hsas[0].public_key, std::nullopt}),
                   ErrorCode::kInvalidRegistry);

  KeyPair thf = keygen(Role::kThf, seed_of(2, 0));
  ActorId lying{Role::kHsa, thf.owner.id};  // id was derived for the THF role
  EXPECT_DHP_ERROR(r.add({lying, thf.public_key, std::nullopt}), ErrorCode::kInvalidRegistry);

  EXPECT_DHP_ERROR(r.add({thf.owner, thf.public_key, c.bms[0].owner.id}),
                   ErrorCode::kInvalidRegistry);
  EXPECT_DHP_ERROR(r.add({thf.owner, thf.public_key, MemberId{7}}), ErrorCode::kInvalidRegistry);
  r.add({thf.owner, thf.public_key, c.hsas[0].owner.id});
  EXPECT_EQ(r.members().size(), 3u);
}

TEST(Registry, TextRoundTrip) {
  Consortium c(3, 4, 2);
  std::string text = c.registry->serialize();
  Registry back = Registry::parse("# consortium\n\n" + text);
  ASSERT_EQ(back.members().size(), c.registry->members().size());
  for (std::size_t i = 0; i < back.members().size(); ++i) {
    const Member& a = back.members()[i];
    const Member& b = c.registry->members()[i];
    EXPECT_EQ(a.actor, b.actor);
    EXPECT_EQ(a.public_key, b.public_key);
    EXPECT_EQ(a.home_hsa, b.home_hsa);
  }
  EXPECT_EQ(back.serialize(), text);
}

TEST(Registry, ParseErrorsNameTheLine) {
  Consortium c(1, 0, 0);
  std::string good = c.registry->serialize();
  for (const std::string& bad :
       {std::string("hsa 00\n"), std::string("nobody ") + good.substr(4),
        good.substr(0, good.size() - 3) + "\n", good.substr(0, good.size() - 1) + " " +
                                                     to_hex(c.hsas[0].owner.id) + " x\n"}) {
    try {
      Registry::parse(good + bad);
      ADD_FAILURE() << "accepted: " << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kInvalidRegistry);
      EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
    }
  }
}

TEST(Registry, SaveAndLoad) {
  testing::TempDir dir;
  Consortium c(2, 2, 2);
  c.registry->save(dir.file("registry.txt"));
  EXPECT_EQ(Registry::load(dir.file("registry.txt")).serialize(), c.registry->serialize());
  EXPECT_DHP_ERROR(Registry::load(dir.file("missing.txt")), ErrorCode::kIoError);
}

}  // namespace
}  // namespace dhp
