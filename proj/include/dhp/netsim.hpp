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

// Deterministic round-based simulation of a DHP consortium: HSA proposers,
// BM read replicas, delayed or partitioned links, and the liveness and
// consistency checks evaluated over the outcome.
//
// Round structure, for round t:
//   1. Submit  - each HSA receives `submission_rate` new DHPs from its THF and
//                relays them to the other HSAs.
//   2. Deliver - every message whose delivery round has come is handed to its
//                recipient, ordered by (payload hash, recipient, sender).
//   3. Propose - an HSA scheduled for its tip + 1 with pending DHPs proposes,
//                appends locally and broadcasts the block.
// A message sent in round t with delay d becomes deliverable in round t + d;
// blocks are sent after the delivery phase, so they arrive no earlier than
// t + 1. After the last round, quiescence rounds run without submissions
// until nothing is in flight and no HSA holds pending DHPs.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "dhp/protocol.hpp"

namespace dhp::sim {

struct ZeroDelay {
  bool operator==(const ZeroDelay&) const = default;
};

// Each message independently delayed by 0..max_rounds rounds.
struct UniformBoundedDelay {
  std::uint32_t max_rounds = 0;
  bool operator==(const UniformBoundedDelay&) const = default;
};

// During [start_round, end_round] the isolated nodes can talk only among
// themselves; messages across the cut wait until it heals.
struct PartitionInterval {
  std::uint32_t start_round = 0;
  std::uint32_t end_round = 0;
  std::vector<std::uint32_t> isolated_nodes;
  bool operator==(const PartitionInterval&) const = default;
};

struct PartitionDelay {
  std::vector<PartitionInterval> intervals;
  // Extra uniform 0..jitter delay on every message.
  std::uint32_t jitter = 0;
  bool operator==(const PartitionDelay&) const = default;
};

using DelayModel = std::variant<ZeroDelay, UniformBoundedDelay, PartitionDelay>;

struct SimConfig {
  std::uint64_t rng_seed = 1;
  std::uint8_t num_hsa = 1;
  std::uint8_t num_bm = 1;
  std::uint32_t rounds = 10;
  std::uint32_t submission_rate = 1;  // DHPs per round per HSA
  DelayModel delay_model = ZeroDelay{};
  std::uint32_t theta = 1;

  // Throws kInvalidConfig.
  void validate() const;
};

// Key-value form used by `sim run --config`:
//   rng_seed, num_hsa, num_bm, rounds, submission_rate, theta,
//   delay_model = zero | uniform | partition,
//   max_delay_rounds (uniform), partitions = "5-8:0;20-22:1,3" and
//   jitter (partition).
SimConfig parse_sim_config(std::string_view text);

// Nodes 0..num_hsa-1 are HSAs, the rest BMs.
inline std::uint32_t node_count(const SimConfig& c) { return c.num_hsa + c.num_bm; }

enum class SimEventKind : std::uint8_t { kSubmit, kPropose, kDeliver, kDrop };

std::string_view to_string(SimEventKind kind);

struct SimEvent {
  std::uint32_t at_round = 0;
  SimEventKind kind = SimEventKind::kSubmit;
  std::uint32_t node = 0;  // acting or receiving node
  std::uint32_t from = 0;  // sender for kDeliver / kDrop
  bool is_block = false;
  Digest payload{};  // block hash, or DHP commitment
  // kPropose only: parent hash and the commitments the block carries.
  Digest parent{};
  std::vector<Digest> contents;
};

struct InclusionDelay {
  std::uint32_t dhp_id = 0;
  std::uint32_t node_id = 0;
  std::uint32_t delay_rounds = 0;

  bool operator==(const InclusionDelay&) const = default;
};

struct SimReport {
  // One entry per (DHP, node): rounds from submission to first appearance in
  // that node's chain.
  std::vector<InclusionDelay> delays;
  std::vector<std::uint64_t> final_heights;
  bool consistency = false;
  std::uint32_t max_inclusion_delay = 0;
  std::uint32_t rounds_run = 0;  // including quiescence
  std::uint32_t submitted = 0;

  bool operator==(const SimReport&) const = default;
};

// `dhp_id node_id delay_rounds` per line, then `consistency true|false`.
std::string format_report(const SimReport& report);
// Inverse of format_report for the exported fields; heights and counters
// not present in the export are left empty or recomputed.
SimReport parse_report(std::string_view text);
// Human-readable summary for the CLI.
std::string summarize(const SimReport& report);

struct IssuedDhp {
  std::uint32_t dhp_id = 0;
  std::uint32_t home_hsa = 0;
  std::uint32_t submitted_round = 0;
  TravelDocument doc;
  Salt salt;
  Digest commitment{};
};

// Everything a run produced; the report is derived from the rest.
struct SimRun {
  SimReport report;
  std::vector<ChainState> final_chains;  // indexed by node
  std::vector<SimEvent> events;
  std::vector<IssuedDhp> issued;
  std::vector<DhpToken> tokens;  // by dhp_id, resolved on node 0's final chain
  KeyPair verifier;              // a registered BM key
  HygienePolicy policy;
  UtcSeconds final_time{};
  // Per round, whether all nodes held identical chains after the delivery
  // phase.
  std::vector<bool> agreement_by_round;
};

// Throws kInvalidConfig.
SimRun simulate(const SimConfig& config);
inline SimReport run_simulation(const SimConfig& config) { return simulate(config).report; }

struct LivenessViolation {
  std::uint32_t dhp_id = 0;
  std::uint32_t node_id = 0;
  std::uint32_t delay_rounds = 0;

  bool operator==(const LivenessViolation&) const = default;
};

// Empty when every DHP reached every node within `theta` rounds.
std::vector<LivenessViolation> check_theta_liveness(const SimReport& report,
                                                    std::uint32_t theta);

// True iff all chains are block-for-block identical.
bool check_consistency(std::span<const ChainState> nodes);

// Identical chains, and bm_verify gives the same outcome for every token on
// every node.
bool check_consistency(std::span<const ChainState> nodes, std::span<const DhpToken> tokens,
                       std::span<const TravelDocument> docs, const KeyPair& verifier,
                       const HygienePolicy& policy, UtcSeconds at);

// Seconds of simulated wall clock per round.
inline constexpr std::int64_t kRoundSeconds = 60;

}  // namespace dhp::sim
