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

#include "dhp/service.hpp"

#include <sys/stat.h>

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dhp/kv.hpp"

namespace dhp::service {

namespace fs = std::filesystem;

namespace {

constexpr std::chrono::seconds kNonceLifetime{120};
constexpr std::size_t kMaxOutstandingNonces = 4096;

Response reply(int status, std::string_view message) {
  return Response{status, Bytes(message.begin(), message.end())};
}

Response frame(int status, Bytes body) { return Response{status, std::move(body)}; }

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(cur);
    cur.clear();
  };
  for (char c : text) {
    if (c == ',') {
      flush();
    } else if (c != ' ' && c != '\t') {
      cur.push_back(c);
    }
  }
  flush();
  return out;
}

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

}  // namespace

void NodeConfig::validate() const {
  auto fail = [](const std::string& why) { throw Error(ErrorCode::kInvalidConfig, why); };
  if (role != Role::kHsa && role != Role::kBm) fail("node role must be hsa or bm");
  split_host_port(listen_address);
  for (const auto& p : peer_addresses) split_host_port(p);
  if (data_dir.empty()) fail("data_dir is required");
  if (registry_file.empty()) fail("registry_file is required");
  if (key_file.empty()) fail("key_file is required");
  if (role == Role::kBm && policy_file.empty()) fail("BM nodes need policy_file");
  std::error_code ec;
  fs::create_directories(data_dir, ec);
  const fs::path probe = fs::path(data_dir) / ".write-probe";
  {
    std::ofstream out(probe);
    if (!out) fail("data_dir '" + data_dir + "' is not writable");
  }
  fs::remove(probe, ec);
}

NodeConfig parse_node_config(std::string_view text, const char* env_data_dir) {
  NodeConfig c;
  for (const auto& [key, value] : parse_kv(text)) {
    if (key == "role") {
      c.role = parse_role(value);
    } else if (key == "listen_address") {
      c.listen_address = value;
    } else if (key == "peer_addresses") {
      c.peer_addresses = split_list(value);
    } else if (key == "data_dir") {
      c.data_dir = value;
    } else if (key == "registry_file") {
      c.registry_file = value;
    } else if (key == "policy_file") {
      c.policy_file = value;
    } else if (key == "key_file") {
      c.key_file = value;
    } else if (key == "sync_interval_ms") {
      long long v = parse_integer(key, value);
      if (v < 1 || v > 3'600'000) throw Error(ErrorCode::kInvalidConfig, "sync_interval_ms out of range");
      c.sync_interval_ms = static_cast<std::uint32_t>(v);
    } else {
      throw Error(ErrorCode::kInvalidConfig, "unknown node key '" + key + "'");
    }
  }
  if (env_data_dir != nullptr && *env_data_dir != '\0') c.data_dir = env_data_dir;
  return c;
}

NodeConfig load_node_config(const std::string& path) {
  NodeConfig c = parse_node_config(read_text_file(path));
  // Relative paths in the file are taken relative to the file itself.
  const fs::path base = fs::path(path).parent_path();
  for (std::string* p : {&c.data_dir, &c.registry_file, &c.policy_file, &c.key_file}) {
    if (!p->empty() && fs::path(*p).is_relative()) *p = (base / *p).string();
  }
  const char* env = std::getenv("DHP_DATA_DIR");
  if (env != nullptr && *env != '\0') c.data_dir = env;
  c.validate();
  return c;
}

std::pair<std::string, int> split_host_port(std::string_view address) {
  auto colon = address.rfind(':');
  if (colon == std::string_view::npos || colon == 0) {
    throw Error(ErrorCode::kInvalidConfig, "address '" + std::string(address) + "' is not host:port");
  }
  int port = 0;
  auto digits = address.substr(colon + 1);
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), port);
  if (ec != std::errc() || ptr != digits.data() + digits.size() || port < 0 || port > 65535) {
    throw Error(ErrorCode::kInvalidConfig, "bad port in '" + std::string(address) + "'");
  }
  return {std::string(address.substr(0, colon)), port};
}

std::string format_key(const KeyPair& key) {
  return std::string(role_name(key.owner.role)) + " " + to_hex(key.owner.id) + " " +
         to_hex(key.public_key) + " " + to_hex(key.secret) + "\n";
}

KeyPair parse_key(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string role, id, pub, secret, extra;
  if (!(in >> role >> id >> pub >> secret) || (in >> extra)) {
    throw Error(ErrorCode::kMalformedKey, "key file needs `role id public secret`");
  }
  KeyPair key = keypair_from_secret(parse_role(role), from_hex(secret));
  if (to_hex(key.public_key) != pub || to_hex(key.owner.id) != id) {
    throw Error(ErrorCode::kMalformedKey, "key file fields do not match its secret");
  }
  return key;
}

KeyPair load_key(const std::string& path) { return parse_key(read_text_file(path)); }

void save_key(const std::string& path, const KeyPair& key) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path);
  ::chmod(path.c_str(), 0600);
  out << format_key(key);
  if (!out.flush()) throw Error(ErrorCode::kIoError, "cannot write " + path);
}

Bytes auth_signing_bytes(ByteView nonce, std::string_view method, std::string_view path,
                         ByteView body) {
  ByteWriter out;
  out.put(kAuthTag).put(nonce).put(method).put(as_bytes("|")).put(path).put(as_bytes("|"))
      .put(sha256(body));
  return std::move(out).bytes();
}

Credential make_credential(const KeyPair& key, ByteView nonce, std::string_view method,
                           std::string_view path, ByteView body) {
  return Credential{key.owner.id, Bytes(nonce.begin(), nonce.end()),
                    sign(key, auth_signing_bytes(nonce, method, path, body))};
}

Bytes encode_verify_request(const VerifyRequest& request) {
  Bytes doc = canonical_doc_bytes(request.doc);
  ByteWriter out;
  out.put(kVerifyRequestTag).put(encode_token(request.token))
      .put_u16(static_cast<std::uint16_t>(doc.size())).put(doc).put_i64(to_unix(request.at));
  return std::move(out).bytes();
}

VerifyRequest decode_verify_request(ByteView bytes) {
  ByteReader in(bytes);
  in.expect(kVerifyRequestTag);
  VerifyRequest r;
  r.token = decode_token(in.take(52));
  r.doc = decode_doc_bytes(in.take(in.u16()));
  r.at = utc_seconds(in.i64());
  in.finish();
  return r;
}

Bytes encode_verification(const Verification& v) {
  const auto& o = v.outcome;
  ByteWriter out;
  out.put(kVerifyResponseTag)
      .put_u8(static_cast<std::uint8_t>(o.status))
      .put_u8(o.violation_reason ? static_cast<std::uint8_t>(*o.violation_reason) : 0)
      .put_u8(o.dhp_location ? 1 : 0)
      .put_u64(o.dhp_location ? o.dhp_location->height : 0)
      .put_u32(o.dhp_location ? o.dhp_location->index : 0)
      .put_i64(to_unix(o.checked_at))
      .put(encode_receipt(v.receipt));
  return std::move(out).bytes();
}

Verification decode_verification(ByteView bytes) {
  ByteReader in(bytes);
  in.expect(kVerifyResponseTag);
  Verification v;
  std::uint8_t status = in.u8();
  if (status > static_cast<std::uint8_t>(VerificationStatus::kPolicyViolation)) {
    throw Error(ErrorCode::kDecodeError, "unknown verification status");
  }
  v.outcome.status = static_cast<VerificationStatus>(status);
  std::uint8_t violation = in.u8();
  if (violation > static_cast<std::uint8_t>(PolicyViolation::kTestInFuture)) {
    throw Error(ErrorCode::kDecodeError, "unknown policy violation");
  }
  if (violation != 0) v.outcome.violation_reason = static_cast<PolicyViolation>(violation);
  std::uint8_t located = in.u8();
  if (located > 1) throw Error(ErrorCode::kDecodeError, "bad location flag");
  RecordLocation loc{in.u64(), in.u32()};
  if (located == 1) v.outcome.dhp_location = loc;
  v.outcome.checked_at = utc_seconds(in.i64());
  v.receipt = decode_receipt(in.take(in.remaining()));
  return v;
}

NodeOptions load_node_options(const NodeConfig& config) {
  NodeOptions o;
  o.role = config.role;
  o.registry = std::make_shared<const Registry>(Registry::load(config.registry_file));
  o.key = load_key(config.key_file);
  if (o.key.owner.role != config.role) {
    throw Error(ErrorCode::kInvalidConfig, "key_file holds a " +
                                               std::string(role_name(o.key.owner.role)) +
                                               " key but the node role is " +
                                               std::string(role_name(config.role)));
  }
  if (!config.policy_file.empty()) o.policy = parse_policy(read_text_file(config.policy_file));
  o.data_dir = config.data_dir;
  return o;
}

NodeService::NodeService(NodeOptions options) : opts_(std::move(options)) {
  if (opts_.role != Role::kHsa && opts_.role != Role::kBm) {
    throw Error(ErrorCode::kInvalidConfig, "node role must be hsa or bm");
  }
  if (!opts_.registry) throw Error(ErrorCode::kInvalidConfig, "node needs a registry");
  const Member* self = opts_.registry->find(opts_.key.owner);
  if (self == nullptr || self->public_key != opts_.key.public_key ||
      opts_.key.owner.role != opts_.role) {
    throw Error(ErrorCode::kInvalidConfig, "node key is not a registered " +
                                               std::string(role_name(opts_.role)));
  }
  if (opts_.role == Role::kBm && !opts_.policy) {
    throw Error(ErrorCode::kInvalidConfig, "BM nodes need a hygiene policy");
  }
  if (!opts_.clock) {
    opts_.clock = [] {
      return std::chrono::time_point_cast<std::chrono::seconds>(std::chrono::system_clock::now());
    };
  }
  fs::create_directories(opts_.data_dir);
  auto recovered =
      recover_block_log(block_log_path(), opts_.registry, opts_.chain, opts_.clock());
  recovered_frames_ = recovered.frames_applied;
  recovered_torn_tail_ = recovered.torn_tail_discarded;
  snapshot_ = std::make_shared<const ChainState>(std::move(recovered.state));
  block_log_ = std::make_unique<BlockLogWriter>(block_log_path());
  if (opts_.role == Role::kBm) {
    receipt_log_ = std::make_unique<FramedLogWriter>(receipt_log_path(), kReceiptLogMagic);
    FrameScan scan = scan_frames(read_file(receipt_log_path()), kReceiptLogMagic);
    if (scan.torn_tail) receipt_log_->truncate_to(scan.valid_end);
  }
}

std::string NodeService::block_log_path() const {
  return (fs::path(opts_.data_dir) / "blocks.log").string();
}

std::string NodeService::receipt_log_path() const {
  return (fs::path(opts_.data_dir) / "receipts.log").string();
}

std::shared_ptr<const ChainState> NodeService::snapshot() const {
  std::lock_guard lock(snapshot_mu_);
  return snapshot_;
}

std::size_t NodeService::mempool_size() const {
  std::lock_guard lock(write_mu_);
  return mempool_.size();
}

Bytes NodeService::issue_challenge() {
  Salt fresh = Salt::random();
  Bytes nonce(fresh.value.begin(), fresh.value.end());
  const UtcSeconds now = opts_.clock();
  std::lock_guard lock(nonce_mu_);
  std::erase_if(nonces_, [now](const auto& n) { return now - n.second > kNonceLifetime; });
  if (nonces_.size() >= kMaxOutstandingNonces) nonces_.erase(nonces_.begin());
  nonces_.emplace(nonce, now);
  return nonce;
}

std::optional<ActorId> NodeService::authenticate(const Request& request) {
  if (!request.credential) return std::nullopt;
  const Credential& c = *request.credential;
  {
    std::lock_guard lock(nonce_mu_);
    auto it = nonces_.find(c.nonce);
    if (it == nonces_.end()) return std::nullopt;
    const bool fresh = opts_.clock() - it->second <= kNonceLifetime;
    nonces_.erase(it);  // single use, even on failure
    if (!fresh) return std::nullopt;
  }
  const Member* member = opts_.registry->find(c.member);
  if (member == nullptr) return std::nullopt;
  if (!verify_sig(member->public_key,
                  auth_signing_bytes(c.nonce, request.method, request.path, request.body),
                  c.signature)) {
    return std::nullopt;
  }
  return member->actor;
}

Response NodeService::handle(const Request& request) {
  const std::string& path = request.path;
  const bool get = request.method == "GET";
  const bool post = request.method == "POST";
  if (get && path == "/challenge") return frame(200, issue_challenge());

  auto caller = authenticate(request);
  if (!caller) return reply(401, "missing or invalid member credential");

  try {
    if (post && path == "/submit_dhp") return submit_dhp(*caller, request.body);
    if (post && path == "/relay_dhp") return relay_dhp(*caller, request.body);
    if (post && path == "/blocks") return push_block(*caller, request.body);
    if (post && path == "/verify") return verify(*caller, request.body);
    if (get && path == "/head") return get_head();
    if (get && starts_with(path, "/token/")) return get_token(*caller, path.substr(7));
    if (get && starts_with(path, "/blocks/at/")) return get_block_at(path.substr(11));
    if (get && starts_with(path, "/block/")) return get_block(path.substr(7));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kIoError) return reply(500, e.what());
    return reply(400, e.what());
  }
  return reply(404, "no such route");
}

std::optional<Response> NodeService::admit(const HealthPassport& record, bool* already_known) {
  *already_known = false;
  const Member* issuer = opts_.registry->find(ActorId{Role::kThf, record.issuer_id});
  if (issuer == nullptr) return reply(403, "unknown issuer");
  bool signed_ok = false;
  try {
    signed_ok = verify_sig(issuer->public_key, dhp_signing_bytes(record), record.issuer_signature);
  } catch (const Error&) {
  }
  if (!signed_ok) return reply(422, "issuer signature does not verify");
  if (record.tested_at > opts_.clock() + opts_.chain.clock_skew) {
    return reply(422, "tested_at is in the future");
  }
  auto snap = snapshot();
  if (auto loc = snap->locate(record.commitment)) {
    if (snap->record_at(*loc) != record) return reply(409, "commitment already on chain");
    *already_known = true;
    return std::nullopt;
  }
  auto it = mempool_.find(record.commitment);
  if (it != mempool_.end()) {
    if (it->second != record) return reply(409, "commitment already pending");
    *already_known = true;
  }
  return std::nullopt;
}

Response NodeService::submit_dhp(const ActorId& caller, ByteView body) {
  if (opts_.role != Role::kHsa) return reply(404, "submissions go to HSA nodes");
  if (caller.role != Role::kThf) return reply(403, "only THFs submit DHPs");
  PendingDhp pending = decode_pending(body);
  if (pending.thf_id != caller || pending.record.issuer_id != caller.id) {
    return reply(403, "DHP issuer does not match the caller");
  }
  const Member* thf = opts_.registry->find(caller);
  if (thf == nullptr || thf->home_hsa != opts_.key.owner.id) {
    return reply(403, "this HSA is not the issuer's home authority");
  }
  std::lock_guard lock(write_mu_);
  bool known = false;
  if (auto rejected = admit(pending.record, &known)) return *rejected;
  const Digest& c = pending.record.commitment;
  home_.insert_or_assign(c, Home{pending.salt, caller.id});
  if (known) return frame(200, Bytes(c.begin(), c.end()));
  mempool_.emplace(c, pending.record);
  relay_queue_.push_back(pending.record);
  return frame(202, Bytes(c.begin(), c.end()));
}

Response NodeService::relay_dhp(const ActorId& caller, ByteView body) {
  if (opts_.role != Role::kHsa) return reply(404, "relays go to HSA nodes");
  if (caller.role != Role::kHsa) return reply(403, "only HSAs relay DHPs");
  ByteReader in(body);
  HealthPassport record = decode_record(in);
  in.finish();
  std::lock_guard lock(write_mu_);
  bool known = false;
  if (auto rejected = admit(record, &known)) return *rejected;
  if (known) return frame(200, {});
  mempool_.emplace(record.commitment, record);
  return frame(202, {});
}

Response NodeService::get_token(const ActorId& caller, std::string_view ack_hex) {
  if (opts_.role != Role::kHsa) return reply(404, "tokens are served by HSA nodes");
  const Digest ack = fixed_from_hex<32>(ack_hex);
  Home home;
  {
    std::lock_guard lock(write_mu_);
    auto it = home_.find(ack);
    if (it == home_.end()) return reply(404, "unknown ack id");
    home = it->second;
  }
  if (caller.role != Role::kThf || caller.id != home.thf) {
    return reply(403, "tokens are released only to the submitting THF");
  }
  auto snap = snapshot();
  auto loc = snap->locate(ack);
  if (!loc) return frame(202, {});
  return frame(200, encode_token(DhpToken{snap->block_hash(loc->height), loc->index, home.salt}));
}

std::optional<ValidationError> NodeService::append_locked(Block block) {
  auto current = snapshot();
  if (current->height_of(header_hash(block.header))) return std::nullopt;
  auto next = std::make_shared<ChainState>(*current);
  if (auto err = next->append(std::move(block), opts_.clock())) return err;
  // Durable before visible.
  block_log_->append(next->tip());
  for (const auto& r : next->tip().records) mempool_.erase(r.commitment);
  std::lock_guard lock(snapshot_mu_);
  snapshot_ = std::move(next);
  return std::nullopt;
}

std::optional<ValidationError> NodeService::accept_block(const Block& block) {
  std::lock_guard lock(write_mu_);
  return append_locked(block);
}

std::optional<Block> NodeService::propose_if_scheduled() {
  if (opts_.role != Role::kHsa) return std::nullopt;
  std::lock_guard lock(write_mu_);
  auto snap = snapshot();
  if (scheduled_authority(snap->height() + 1, snap->authority_set()) != opts_.key.owner) {
    return std::nullopt;
  }
  std::vector<HealthPassport> pending;
  for (const auto& [c, record] : mempool_) {
    if (pending.size() == opts_.chain.max_block_records) break;
    if (!snap->locate(c)) pending.push_back(record);
  }
  if (pending.empty()) return std::nullopt;
  Block block = propose_block(*snap, std::move(pending), opts_.key, opts_.clock());
  if (auto err = append_locked(block)) {
    throw Error(ErrorCode::kValidationFailed,
                "own proposal rejected: " + std::string(to_string(*err)));
  }
  return block;
}

std::vector<HealthPassport> NodeService::take_relay_queue() {
  std::lock_guard lock(write_mu_);
  return std::exchange(relay_queue_, {});
}

Response NodeService::push_block(const ActorId& caller, ByteView body) {
  if (caller.role != Role::kHsa) return reply(403, "only HSAs push blocks");
  Block block = decode_block(body);
  std::lock_guard lock(write_mu_);
  auto snap = snapshot();
  if (block.header.height > snap->height() + 1) return reply(409, "block does not connect to tip");
  if (auto err = append_locked(std::move(block))) {
    return reply(422, "block rejected: " + std::string(to_string(*err)));
  }
  return frame(200, {});
}

Response NodeService::get_head() const {
  return frame(200, encode_header(snapshot()->tip().header));
}

Response NodeService::get_block(std::string_view hash_hex) const {
  const Digest hash = fixed_from_hex<32>(hash_hex);
  auto snap = snapshot();
  auto h = snap->height_of(hash);
  if (!h) return reply(404, "unknown block");
  return frame(200, encode_block(snap->block(*h)));
}

Response NodeService::get_block_at(std::string_view height) const {
  std::uint64_t h = 0;
  auto [ptr, ec] = std::from_chars(height.data(), height.data() + height.size(), h);
  if (ec != std::errc() || ptr != height.data() + height.size()) return reply(400, "bad height");
  auto snap = snapshot();
  if (h > snap->height()) return reply(404, "no block at that height");
  return frame(200, encode_block(snap->block(h)));
}

Response NodeService::verify(const ActorId& caller, ByteView body) {
  if (opts_.role != Role::kBm) return reply(404, "verification runs on BM nodes");
  if (caller.role != Role::kBm) return reply(403, "only BMs request verification");
  VerifyRequest req = decode_verify_request(body);
  Verification v = bm_verify(opts_.key, *snapshot(), req.token, req.doc, *opts_.policy, req.at);
  {
    std::lock_guard lock(receipt_mu_);
    receipt_log_->append(encode_receipt(v.receipt));
  }
  return frame(200, encode_verification(v));
}

}  // namespace dhp::service
