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

#include "dhp/netsim.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <sstream>
#include <unordered_map>

#include "dhp/kv.hpp"

namespace dhp::sim {

namespace {

// std distributions are implementation-defined; draws here are reduced by
// hand so a seed means the same run on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  std::uint64_t next() { return gen_(); }
  std::uint32_t below(std::uint32_t bound) {
    return static_cast<std::uint32_t>(next() % bound);
  }
  template <std::size_t N>
  std::array<std::uint8_t, N> bytes() {
    std::array<std::uint8_t, N> out{};
    for (std::size_t i = 0; i < N; i += 8) {
      std::uint64_t v = next();
      for (std::size_t j = 0; j < 8 && i + j < N; ++j) {
        out[i + j] = static_cast<std::uint8_t>(v >> (8 * j));
      }
    }
    return out;
  }

 private:
  std::mt19937_64 gen_;
};

struct Message {
  std::uint32_t earliest_round = 0;
  std::uint32_t from = 0;
  std::uint32_t to = 0;
  bool is_block = false;
  Digest payload{};
  std::uint64_t seq = 0;
};

struct Node {
  std::uint32_t id = 0;
  bool is_hsa = false;
  const KeyPair* key = nullptr;
  ChainState chain;
  std::unordered_map<Digest, Digest, DigestHash> known_parent;  // block → parent
  std::unordered_map<Digest, std::vector<Digest>, DigestHash> children;
  std::map<Digest, HealthPassport> received;  // HSA mempool source
  std::unordered_map<Digest, std::uint32_t, DigestHash> appeared;
};

constexpr const char* kCountries[] = {"GRC", "CYP", "GBR", "DEU", "FRA", "ITA", "ESP"};

class Simulator {
 public:
  explicit Simulator(const SimConfig& config) : cfg_(config), rng_(config.rng_seed) {}

  SimRun run();

 private:
  UtcSeconds time_of(std::uint32_t round) const {
    return ChainConfig{}.genesis_time + std::chrono::seconds{kRoundSeconds * round};
  }

  void setup();
  std::uint32_t draw_delay();
  bool separated(std::uint32_t a, std::uint32_t b, std::uint32_t round) const;
  bool partition_pending(std::uint32_t round) const;
  void send(std::uint32_t round, std::uint32_t from, std::uint32_t to, bool is_block,
            const Digest& payload, bool after_delivery);
  void submit_phase(std::uint32_t round);
  void deliver_phase(std::uint32_t round);
  void propose_phase(std::uint32_t round);
  void receive_block(Node& node, std::uint32_t from, const Digest& hash, std::uint32_t round);
  void receive_dhp(Node& node, std::uint32_t from, const Digest& commitment,
                   std::uint32_t round);
  void extend_greedily(const Node& node, ChainState& chain, UtcSeconds now) const;
  void note_appearances(Node& node, std::uint64_t from_height, std::uint32_t round);
  std::vector<HealthPassport> pending_of(const Node& node) const;
  bool quiescent(std::uint32_t round) const;
  void log(SimEvent e) { events_.push_back(std::move(e)); }

  const SimConfig& cfg_;
  Rng rng_;
  std::shared_ptr<Registry> registry_;
  std::vector<KeyPair> hsa_keys_, thf_keys_, bm_keys_;
  std::vector<Node> nodes_;
  std::vector<Message> in_flight_;
  std::unordered_map<Digest, Block, DigestHash> blocks_;
  std::unordered_map<Digest, HealthPassport, DigestHash> dhps_;
  std::vector<SimEvent> events_;
  std::vector<IssuedDhp> issued_;
  std::vector<bool> agreement_;
  std::uint64_t seq_ = 0;
};

void Simulator::setup() {
  registry_ = std::make_shared<Registry>();
  for (std::uint32_t i = 0; i < cfg_.num_hsa; ++i) {
    hsa_keys_.push_back(keygen(Role::kHsa, rng_.bytes<32>()));
    registry_->add(Member{hsa_keys_.back().owner, hsa_keys_.back().public_key, std::nullopt});
  }
  for (std::uint32_t i = 0; i < cfg_.num_hsa; ++i) {
    thf_keys_.push_back(keygen(Role::kThf, rng_.bytes<32>()));
    registry_->add(Member{thf_keys_.back().owner, thf_keys_.back().public_key,
                          hsa_keys_[i].owner.id});
  }
  const std::uint32_t bm_keys = std::max<std::uint32_t>(cfg_.num_bm, 1);
  for (std::uint32_t i = 0; i < bm_keys; ++i) {
    bm_keys_.push_back(keygen(Role::kBm, rng_.bytes<32>()));
    registry_->add(Member{bm_keys_.back().owner, bm_keys_.back().public_key, std::nullopt});
  }
  for (std::uint32_t i = 0; i < node_count(cfg_); ++i) {
    Node n{i, i < cfg_.num_hsa, i < cfg_.num_hsa ? &hsa_keys_[i] : nullptr,
           ChainState(registry_), {}, {}, {}, {}};
    nodes_.push_back(std::move(n));
  }
}

std::uint32_t Simulator::draw_delay() {
  return std::visit(
      [this](const auto& model) -> std::uint32_t {
        using T = std::decay_t<decltype(model)>;
        if constexpr (std::is_same_v<T, ZeroDelay>) {
          return 0;
        } else if constexpr (std::is_same_v<T, UniformBoundedDelay>) {
          return rng_.below(model.max_rounds + 1);
        } else {
          return model.jitter == 0 ? 0 : rng_.below(model.jitter + 1);
        }
      },
      cfg_.delay_model);
}

bool Simulator::separated(std::uint32_t a, std::uint32_t b, std::uint32_t round) const {
  const auto* p = std::get_if<PartitionDelay>(&cfg_.delay_model);
  if (p == nullptr) return false;
  for (const auto& iv : p->intervals) {
    if (round < iv.start_round || round > iv.end_round) continue;
    auto isolated = [&](std::uint32_t n) {
      return std::find(iv.isolated_nodes.begin(), iv.isolated_nodes.end(), n) !=
             iv.isolated_nodes.end();
    };
    if (isolated(a) != isolated(b)) return true;
  }
  return false;
}

bool Simulator::partition_pending(std::uint32_t round) const {
  const auto* p = std::get_if<PartitionDelay>(&cfg_.delay_model);
  if (p == nullptr) return false;
  return std::any_of(p->intervals.begin(), p->intervals.end(),
                     [round](const PartitionInterval& iv) { return iv.end_round >= round; });
}

void Simulator::send(std::uint32_t round, std::uint32_t from, std::uint32_t to, bool is_block,
                     const Digest& payload, bool after_delivery) {
  std::uint32_t d = draw_delay();
  std::uint32_t earliest = round + (after_delivery ? std::max<std::uint32_t>(d, 1) : d);
  in_flight_.push_back(Message{earliest, from, to, is_block, payload, seq_++});
}

void Simulator::submit_phase(std::uint32_t round) {
  for (std::uint32_t h = 0; h < cfg_.num_hsa; ++h) {
    for (std::uint32_t k = 0; k < cfg_.submission_rate; ++k) {
      IssuedDhp dhp;
      dhp.dhp_id = static_cast<std::uint32_t>(issued_.size());
      dhp.home_hsa = h;
      dhp.submitted_round = round;
      std::string number = "P";
      for (int c = 0; c < 8; ++c) {
        std::uint32_t v = rng_.below(36);
        number.push_back(static_cast<char>(v < 10 ? '0' + v : 'A' + v - 10));
      }
      dhp.doc = TravelDocument{number, kCountries[rng_.below(std::size(kCountries))],
                               parse_date("2030-01-01")};
      dhp.salt.value = rng_.bytes<16>();
      const UtcSeconds now = time_of(round);
      PendingDhp p = thf_issue(thf_keys_[h], dhp.doc, true, TestMethod::from_code("RT-qPCR"),
                               now - std::chrono::hours{2}, now, dhp.salt);
      dhp.commitment = p.record.commitment;
      dhps_.emplace(dhp.commitment, p.record);
      nodes_[h].received.emplace(dhp.commitment, p.record);
      log(SimEvent{round, SimEventKind::kSubmit, h, h, false, dhp.commitment, {}, {}});
      for (std::uint32_t other = 0; other < cfg_.num_hsa; ++other) {
        if (other != h) send(round, h, other, false, dhp.commitment, false);
      }
      issued_.push_back(std::move(dhp));
    }
  }
}

void Simulator::deliver_phase(std::uint32_t round) {
  std::vector<Message> due;
  std::vector<Message> later;
  for (auto& m : in_flight_) {
    if (m.earliest_round <= round && !separated(m.from, m.to, round)) {
      due.push_back(m);
    } else {
      later.push_back(m);
    }
  }
  in_flight_ = std::move(later);
  std::sort(due.begin(), due.end(), [](const Message& a, const Message& b) {
    return std::tie(a.payload, a.to, a.from, a.seq) < std::tie(b.payload, b.to, b.from, b.seq);
  });
  for (const auto& m : due) {
    if (m.is_block) {
      receive_block(nodes_[m.to], m.from, m.payload, round);
    } else {
      receive_dhp(nodes_[m.to], m.from, m.payload, round);
    }
  }
}

void Simulator::receive_dhp(Node& node, std::uint32_t from, const Digest& c,
                            std::uint32_t round) {
  if (node.received.contains(c) || node.chain.locate(c)) {
    log(SimEvent{round, SimEventKind::kDrop, node.id, from, false, c, {}, {}});
    return;
  }
  node.received.emplace(c, dhps_.at(c));
  log(SimEvent{round, SimEventKind::kDeliver, node.id, from, false, c, {}, {}});
}

void Simulator::extend_greedily(const Node& node, ChainState& chain, UtcSeconds now) const {
  for (;;) {
    auto it = node.children.find(chain.tip_hash());
    if (it == node.children.end()) return;
    std::vector<Digest> kids = it->second;
    std::sort(kids.begin(), kids.end());
    bool extended = false;
    for (const auto& kid : kids) {
      if (!chain.append(blocks_.at(kid), now)) {
        extended = true;
        break;
      }
    }
    if (!extended) return;
  }
}

void Simulator::note_appearances(Node& node, std::uint64_t from_height, std::uint32_t round) {
  for (std::uint64_t h = from_height; h <= node.chain.height(); ++h) {
    for (const auto& r : node.chain.block(h).records) node.appeared.emplace(r.commitment, round);
  }
}

void Simulator::receive_block(Node& node, std::uint32_t from, const Digest& hash,
                              std::uint32_t round) {
  if (node.known_parent.contains(hash) || node.chain.height_of(hash)) {
    log(SimEvent{round, SimEventKind::kDrop, node.id, from, true, hash, {}, {}});
    return;
  }
  const Block& block = blocks_.at(hash);
  node.known_parent.emplace(hash, block.header.prev_hash);
  node.children[block.header.prev_hash].push_back(hash);
  log(SimEvent{round, SimEventKind::kDeliver, node.id, from, true, hash, {}, {}});

  // Walk back to the node's current chain; an unknown ancestor leaves the
  // block buffered until that ancestor arrives.
  Digest cursor = block.header.prev_hash;
  while (!node.chain.height_of(cursor)) {
    auto it = node.known_parent.find(cursor);
    if (it == node.known_parent.end()) return;
    cursor = it->second;
  }
  const std::uint64_t fork_height = *node.chain.height_of(cursor);
  const UtcSeconds now = time_of(round);
  const std::uint64_t old_height = node.chain.height();

  if (fork_height == old_height) {
    extend_greedily(node, node.chain, now);
    note_appearances(node, old_height + 1, round);
    return;
  }
  ChainState candidate = node.chain.prefix(fork_height);
  extend_greedily(node, candidate, now);
  const ChainState* options[] = {&node.chain, &candidate};
  if (fork_choice_index(options) == 1) {
    node.chain = std::move(candidate);
    note_appearances(node, fork_height + 1, round);
  }
}

std::vector<HealthPassport> Simulator::pending_of(const Node& node) const {
  std::vector<HealthPassport> out;
  const std::uint32_t limit = node.chain.config().max_block_records;
  for (const auto& [c, record] : node.received) {
    if (out.size() == limit) break;
    if (!node.chain.locate(c)) out.push_back(record);
  }
  return out;
}

void Simulator::propose_phase(std::uint32_t round) {
  for (std::uint32_t h = 0; h < cfg_.num_hsa; ++h) {
    Node& node = nodes_[h];
    const ActorId& scheduled =
        scheduled_authority(node.chain.height() + 1, node.chain.authority_set());
    if (scheduled != node.key->owner) continue;
    std::vector<HealthPassport> pending = pending_of(node);
    if (pending.empty()) continue;
    Block block = propose_block(node.chain, std::move(pending), *node.key, time_of(round));
    const Digest hash = header_hash(block.header);
    SimEvent e{round, SimEventKind::kPropose, h, h, true, hash, block.header.prev_hash, {}};
    for (const auto& r : block.records) e.contents.push_back(r.commitment);
    blocks_.emplace(hash, block);
    node.known_parent.emplace(hash, block.header.prev_hash);
    node.children[block.header.prev_hash].push_back(hash);
    if (auto err = node.chain.append(std::move(block), time_of(round))) {
      throw Error(ErrorCode::kValidationFailed,
                  "own proposal rejected: " + std::string(to_string(*err)));
    }
    note_appearances(node, node.chain.height(), round);
    log(std::move(e));
    for (std::uint32_t other = 0; other < nodes_.size(); ++other) {
      if (other != h) send(round, h, other, true, hash, true);
    }
  }
}

bool Simulator::quiescent(std::uint32_t round) const {
  if (!in_flight_.empty() || partition_pending(round)) return false;
  for (std::uint32_t h = 0; h < cfg_.num_hsa; ++h) {
    if (!pending_of(nodes_[h]).empty()) return false;
  }
  return true;
}

SimRun Simulator::run() {
  cfg_.validate();
  setup();
  constexpr std::uint32_t kQuiescenceCap = 100000;
  std::uint32_t round = 1;
  for (;; ++round) {
    if (round <= cfg_.rounds) submit_phase(round);
    deliver_phase(round);
    bool agree = true;
    for (const auto& n : nodes_) agree = agree && n.chain.tip_hash() == nodes_[0].chain.tip_hash();
    agreement_.push_back(agree);
    propose_phase(round);
    if (round >= cfg_.rounds && quiescent(round)) break;
    if (round > cfg_.rounds + kQuiescenceCap) {
      throw Error(ErrorCode::kInvalidConfig, "simulation failed to quiesce");
    }
  }

  SimRun out;
  out.report.rounds_run = round;
  out.report.submitted = static_cast<std::uint32_t>(issued_.size());
  for (const auto& dhp : issued_) {
    for (const auto& node : nodes_) {
      auto it = node.appeared.find(dhp.commitment);
      std::uint32_t delay = it == node.appeared.end() ? UINT32_MAX
                                                     : it->second - dhp.submitted_round;
      out.report.delays.push_back(InclusionDelay{dhp.dhp_id, node.id, delay});
      out.report.max_inclusion_delay = std::max(out.report.max_inclusion_delay, delay);
    }
  }
  for (const auto& node : nodes_) {
    out.report.final_heights.push_back(node.chain.height());
    out.final_chains.push_back(node.chain);
  }
  std::vector<TravelDocument> docs;
  for (const auto& dhp : issued_) {
    DhpToken token{};
    token.salt = dhp.salt;
    if (auto loc = nodes_[0].chain.locate(dhp.commitment)) {
      token.header_hash = nodes_[0].chain.block_hash(loc->height);
      token.record_index = loc->index;
    }
    out.tokens.push_back(token);
    docs.push_back(dhp.doc);
  }
  out.verifier = bm_keys_[0];
  out.policy.accepted_methods = {"RT-qPCR"};
  out.final_time = time_of(round);
  out.report.consistency = check_consistency(out.final_chains, out.tokens, docs, out.verifier,
                                             out.policy, out.final_time);
  out.events = std::move(events_);
  out.issued = std::move(issued_);
  out.agreement_by_round = std::move(agreement_);
  return out;
}

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (c != ' ' && c != '\t') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::uint32_t to_u32(std::string_view key, std::string_view v) {
  long long x = parse_integer(key, v);
  if (x < 0 || x > UINT32_MAX) {
    throw Error(ErrorCode::kInvalidConfig, std::string(key) + " out of range");
  }
  return static_cast<std::uint32_t>(x);
}

}  // namespace

void SimConfig::validate() const {
  auto fail = [](const std::string& why) { throw Error(ErrorCode::kInvalidConfig, why); };
  if (num_hsa < 1) fail("num_hsa must be at least 1");
  if (rounds < 1) fail("rounds must be at least 1");
  if (theta < 1) fail("theta must be at least 1");
  if (const auto* p = std::get_if<PartitionDelay>(&delay_model)) {
    for (const auto& iv : p->intervals) {
      if (iv.start_round > iv.end_round) fail("partition interval ends before it starts");
      for (auto n : iv.isolated_nodes) {
        if (n >= node_count(*this)) fail("partition names unknown node " + std::to_string(n));
      }
    }
  }
}

SimConfig parse_sim_config(std::string_view text) {
  auto kv = parse_kv(text);
  SimConfig c;
  std::string model = "zero";
  std::uint32_t max_delay = 0, jitter = 0;
  std::vector<PartitionInterval> intervals;
  for (const auto& [key, value] : kv) {
    if (key == "rng_seed") {
      c.rng_seed = static_cast<std::uint64_t>(parse_integer(key, value));
    } else if (key == "num_hsa" || key == "num_bm") {
      std::uint32_t v = to_u32(key, value);
      if (v > 255) throw Error(ErrorCode::kInvalidConfig, key + " exceeds 255");
      (key == "num_hsa" ? c.num_hsa : c.num_bm) = static_cast<std::uint8_t>(v);
    } else if (key == "rounds") {
      c.rounds = to_u32(key, value);
    } else if (key == "submission_rate") {
      c.submission_rate = to_u32(key, value);
    } else if (key == "theta") {
      c.theta = to_u32(key, value);
    } else if (key == "delay_model") {
      model = value;
    } else if (key == "max_delay_rounds") {
      max_delay = to_u32(key, value);
    } else if (key == "jitter") {
      jitter = to_u32(key, value);
    } else if (key == "partitions") {
      for (const auto& spec : split(value, ';')) {
        if (spec.empty()) continue;
        auto colon = spec.find(':');
        auto dash = spec.find('-');
        if (colon == std::string::npos || dash == std::string::npos || dash > colon) {
          throw Error(ErrorCode::kInvalidConfig, "bad partition '" + spec + "'");
        }
        PartitionInterval iv;
        iv.start_round = to_u32(key, spec.substr(0, dash));
        iv.end_round = to_u32(key, spec.substr(dash + 1, colon - dash - 1));
        for (const auto& n : split(spec.substr(colon + 1), ',')) {
          iv.isolated_nodes.push_back(to_u32(key, n));
        }
        intervals.push_back(std::move(iv));
      }
    } else {
      throw Error(ErrorCode::kInvalidConfig, "unknown simulation key '" + key + "'");
    }
  }
  if (model == "zero") {
    c.delay_model = ZeroDelay{};
  } else if (model == "uniform") {
    c.delay_model = UniformBoundedDelay{max_delay};
  } else if (model == "partition") {
    c.delay_model = PartitionDelay{std::move(intervals), jitter};
  } else {
    throw Error(ErrorCode::kInvalidConfig, "unknown delay_model '" + model + "'");
  }
  c.validate();
  return c;
}

std::string_view to_string(SimEventKind kind) {
  switch (kind) {
    case SimEventKind::kSubmit: return "Submit";
    case SimEventKind::kPropose: return "Propose";
    case SimEventKind::kDeliver: return "Deliver";
    case SimEventKind::kDrop: return "Drop";
  }
  return "Unknown";
}

std::string format_report(const SimReport& report) {
  std::string out;
  for (const auto& d : report.delays) {
    out += std::to_string(d.dhp_id) + " " + std::to_string(d.node_id) + " " +
           std::to_string(d.delay_rounds) + "\n";
  }
  out += std::string("consistency ") + (report.consistency ? "true" : "false") + "\n";
  return out;
}

SimReport parse_report(std::string_view text) {
  SimReport r;
  std::istringstream in{std::string(text)};
  std::string line;
  bool footer = false;
  std::uint32_t max_dhp = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (footer) throw Error(ErrorCode::kDecodeError, "data after consistency footer");
    std::istringstream fields(line);
    std::string first;
    fields >> first;
    if (first == "consistency") {
      std::string v;
      fields >> v;
      r.consistency = parse_bool("consistency", v);
      footer = true;
      continue;
    }
    InclusionDelay d;
    long long node = -1, delay = -1;
    d.dhp_id = to_u32("dhp_id", first);
    if (!(fields >> node >> delay) || node < 0 || delay < 0 || delay > UINT32_MAX) {
      throw Error(ErrorCode::kDecodeError, "bad report line '" + line + "'");
    }
    d.node_id = static_cast<std::uint32_t>(node);
    d.delay_rounds = static_cast<std::uint32_t>(delay);
    r.max_inclusion_delay = std::max(r.max_inclusion_delay, d.delay_rounds);
    max_dhp = std::max(max_dhp, d.dhp_id + 1);
    r.delays.push_back(d);
  }
  if (!footer) throw Error(ErrorCode::kDecodeError, "missing consistency footer");
  r.submitted = max_dhp;
  return r;
}

std::string summarize(const SimReport& report) {
  std::ostringstream out;
  out << "submitted " << report.submitted << "\n"
      << "rounds_run " << report.rounds_run << "\n"
      << "final_heights";
  for (auto h : report.final_heights) out << " " << h;
  out << "\nmax_inclusion_delay " << report.max_inclusion_delay << "\n"
      << "consistency " << (report.consistency ? "true" : "false") << "\n";
  return out.str();
}

SimRun simulate(const SimConfig& config) { return Simulator(config).run(); }

std::vector<LivenessViolation> check_theta_liveness(const SimReport& report,
                                                    std::uint32_t theta) {
  std::vector<LivenessViolation> out;
  for (const auto& d : report.delays) {
    if (d.delay_rounds > theta) out.push_back({d.dhp_id, d.node_id, d.delay_rounds});
  }
  return out;
}

bool check_consistency(std::span<const ChainState> nodes) {
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    if (!nodes[i].same_chain(nodes[0])) return false;
  }
  return true;
}

bool check_consistency(std::span<const ChainState> nodes, std::span<const DhpToken> tokens,
                       std::span<const TravelDocument> docs, const KeyPair& verifier,
                       const HygienePolicy& policy, UtcSeconds at) {
  if (!check_consistency(nodes)) return false;
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    std::optional<VerificationOutcome> first;
    for (const auto& node : nodes) {
      auto v = bm_verify(verifier, node, tokens[t], docs[t], policy, at);
      if (!first) {
        first = v.outcome;
      } else if (!(*first == v.outcome)) {
        return false;
      }
    }
  }
  return true;
}

}  // namespace dhp::sim
