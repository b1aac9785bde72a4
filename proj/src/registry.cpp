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

#include "dhp/registry.hpp"

#include <fstream>
#include <sstream>

namespace dhp {

void Registry::add(Member member) {
  if (by_id_.contains(member.actor.id)) {
    throw Error(ErrorCode::kInvalidRegistry,
                "duplicate member id " + to_hex(member.actor.id));
  }
  if (derive_member_id(member.actor.role, member.public_key) != member.actor.id) {
    throw Error(ErrorCode::kInvalidRegistry,
                "member id " + to_hex(member.actor.id) + " does not match its key");
  }
  if (member.home_hsa) {
    const Member* home = find(*member.home_hsa);
    if (home == nullptr || home->actor.role != Role::kHsa) {
      throw Error(ErrorCode::kInvalidRegistry,
                  "home HSA " + to_hex(*member.home_hsa) + " is not a registered HSA");
    }
  }
  by_id_.emplace(member.actor.id, members_.size());
  members_.push_back(std::move(member));
}

const Member* Registry::find(const MemberId& id) const {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &members_[it->second];
}

const Member* Registry::find(const ActorId& actor) const {
  const Member* m = find(actor.id);
  return (m != nullptr && m->actor.role == actor.role) ? m : nullptr;
}

std::vector<ActorId> Registry::authorities() const {
  std::vector<ActorId> out;
  for (const auto& m : members_) {
    if (m.actor.role == Role::kHsa) out.push_back(m.actor);
  }
  return out;
}

Registry Registry::parse(std::string_view text) {
  Registry registry;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string role, id_hex, key_hex, home_hex, extra;
    if (!(fields >> role >> id_hex >> key_hex)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      throw Error(ErrorCode::kInvalidRegistry,
                  "line " + std::to_string(line_no) + ": expected role id key");
    }
    Member m;
    try {
      m.actor = ActorId{parse_role(role), fixed_from_hex<16>(id_hex)};
      m.public_key = fixed_from_hex<32>(key_hex);
      if (fields >> home_hex) m.home_hsa = fixed_from_hex<16>(home_hex);
    } catch (const Error& e) {
      throw Error(ErrorCode::kInvalidRegistry,
                  "line " + std::to_string(line_no) + ": " + e.what());
    }
    if (fields >> extra) {
      throw Error(ErrorCode::kInvalidRegistry,
                  "line " + std::to_string(line_no) + ": trailing fields");
    }
    registry.add(std::move(m));
  }
  return registry;
}

std::string Registry::serialize() const {
  std::string out;
  for (const auto& m : members_) {
    out += std::string(role_name(m.actor.role)) + " " + to_hex(m.actor.id) + " " +
           to_hex(m.public_key);
    if (m.home_hsa) out += " " + to_hex(*m.home_hsa);
    out += "\n";
  }
  return out;
}

Registry Registry::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open registry " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

void Registry::save(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write registry " + path);
  out << serialize();
}

}  // namespace dhp
