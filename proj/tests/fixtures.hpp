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

// Shared test scaffolding: deterministic consortia, seeded generators, and
// scratch directories.

#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <random>
#include <stdexcept>
#include <stdlib.h>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "dhp/protocol.hpp"

#define EXPECT_DHP_ERROR(stmt, expected_code)                          \
  do {                                                                 \
    try {                                                              \
      stmt;                                                            \
      ADD_FAILURE() << "no error from " #stmt;                         \
    } catch (const ::dhp::Error& dhp_error_) {                         \
      EXPECT_EQ(dhp_error_.code(), expected_code) << dhp_error_.what(); \
    }                                                                  \
  } while (0)

namespace dhp {
inline void PrintTo(ErrorCode c, std::ostream* os) { *os << to_string(c); }
inline void PrintTo(ValidationError e, std::ostream* os) { *os << to_string(e); }
inline void PrintTo(VerificationStatus s, std::ostream* os) { *os << to_string(s); }
inline void PrintTo(PolicyViolation v, std::ostream* os) { *os << to_string(v); }
}  // namespace dhp

namespace dhp::testing {

// Seeded generator for property tests. Reduces raw draws by hand so cases
// are identical on every standard library.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  std::uint64_t next() { return rng_(); }
  std::uint32_t below(std::uint32_t n) { return static_cast<std::uint32_t>(next() % n); }
  bool coin() { return (next() & 1) != 0; }

  template <std::size_t N>
  std::array<std::uint8_t, N> bytes() {
    std::array<std::uint8_t, N> out{};
    for (auto& b : out) b = static_cast<std::uint8_t>(next());
    return out;
  }

  Salt salt() { return Salt{bytes<16>()}; }

  std::string alnum(std::size_t len) {
    static constexpr char kChars[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
    std::string s;
    for (std::size_t i = 0; i < len; ++i) s.push_back(kChars[below(36)]);
    return s;
  }

  TravelDocument doc() {
    std::string country;
    for (int i = 0; i < 3; ++i) country.push_back(static_cast<char>('A' + below(26)));
    return TravelDocument{alnum(5 + below(16)), country,
                          UtcDate(std::chrono::days{below(40000)})};
  }

 private:
  std::mt19937_64 rng_;
};

inline KeySeed seed_of(std::uint8_t tag, std::uint32_t n) {
  KeySeed s{};
  s[0] = tag;
  for (int i = 0; i < 4; ++i) s[1 + i] = static_cast<std::uint8_t>(n >> (8 * i));
  return s;
}

inline const UtcSeconds kT0 = utc_seconds(1'700'000'000);  // 2023-11-14T22:13:20Z

// Deterministic consortium. THF i is homed at HSA i mod |HSAs|.
struct Consortium {
  std::vector<KeyPair> hsas, thfs, bms;
  std::shared_ptr<Registry> registry = std::make_shared<Registry>();

  Consortium(std::size_t n_hsa, std::size_t n_thf, std::size_t n_bm) {
    for (std::uint32_t i = 0; i < n_hsa; ++i) {
      hsas.push_back(keygen(Role::kHsa, seed_of(1, i)));
      registry->add({hsas.back().owner, hsas.back().public_key, std::nullopt});
    }
    for (std::uint32_t i = 0; i < n_thf; ++i) {
      thfs.push_back(keygen(Role::kThf, seed_of(2, i)));
      std::optional<MemberId> home;
      if (!hsas.empty()) home = hsas[i % hsas.size()].owner.id;
      registry->add({thfs.back().owner, thfs.back().public_key, home});
    }
    for (std::uint32_t i = 0; i < n_bm; ++i) {
      bms.push_back(keygen(Role::kBm, seed_of(3, i)));
      registry->add({bms.back().owner, bms.back().public_key, std::nullopt});
    }
  }

  ChainState chain() const { return ChainState(registry); }

  // The HSA holding the slot after the current tip.
  const KeyPair& scheduled(const ChainState& state) const {
    const ActorId& who = scheduled_authority(state.height() + 1, state.authority_set());
    for (const auto& k : hsas) {
      if (k.owner == who) return k;
    }
    throw std::logic_error("scheduled authority not in fixture");
  }

  PendingDhp issue(std::size_t thf, const TravelDocument& doc, UtcSeconds tested_at,
                   std::optional<Salt> salt = std::nullopt,
                   const std::string& method = "RT-qPCR") const {
    return thf_issue(thfs.at(thf), doc, true, TestMethod::from_code(method), tested_at,
                     tested_at, salt);
  }

  // Registers `pending` in one block at `now` by the scheduled HSA.
  std::vector<DhpToken> register_batch(ChainState& state, std::span<const PendingDhp> pending,
                                       UtcSeconds now) const {
    return hsa_register(scheduled(state), state, pending, now);
  }
};

inline HygienePolicy default_policy() {
  HygienePolicy p;
  p.accepted_methods = {"RT-qPCR", "RT-LAMP"};
  p.max_test_age = std::chrono::hours{72};
  p.require_risk_free = true;
  return p;
}

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "dhp-test-XXXXXX").string();
    if (::mkdtemp(tmpl.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace dhp::testing
