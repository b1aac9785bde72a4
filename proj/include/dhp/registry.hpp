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

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dhp/crypto.hpp"

namespace dhp {

struct Member {
  ActorId actor;
  PublicKey public_key{};
  // THFs submit only to this HSA.
  std::optional<MemberId> home_hsa;
};

struct MemberIdHash {
  std::size_t operator()(const MemberId& id) const noexcept {
    std::size_t h = 0;
    for (int i = 0; i < 8; ++i) h = (h << 8) | id[i];
    return h;
  }
};

// Static consortium membership: who may issue, who may append, who may read.
// The order in which HSAs are added is the authority rotation order.
class Registry {
 public:
  // Throws kInvalidRegistry on a duplicate id, an id that does not match the
  // key, or a home HSA that is not a registered HSA.
  void add(Member member);

  const Member* find(const MemberId& id) const;
  // Null unless a member with this id exists and has the same role.
  const Member* find(const ActorId& actor) const;

  const std::vector<Member>& members() const { return members_; }
  std::vector<ActorId> authorities() const;

  // Line format: `role hex_id hex_pubkey [home_hsa_hex_id]`. '#' starts a
  // comment line.
  static Registry parse(std::string_view text);
  std::string serialize() const;
  static Registry load(const std::string& path);
  void save(const std::string& path) const;

 private:
  std::vector<Member> members_;
  std::unordered_map<MemberId, std::size_t, MemberIdHash> by_id_;
};

}  // namespace dhp
