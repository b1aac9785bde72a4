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

// Consortium node: configuration, key files, member authentication, request
// frames, and the transport-independent request handler. The HTTP binding
// lives in http.hpp.

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "dhp/block_log.hpp"
#include "dhp/framed_log.hpp"
#include "dhp/protocol.hpp"

namespace dhp::service {

struct NodeConfig {
  Role role = Role::kHsa;  // kHsa or kBm
  std::string listen_address = "127.0.0.1:7400";
  std::vector<std::string> peer_addresses;
  std::string data_dir;
  std::string registry_file;
  std::string policy_file;  // BM only
  std::string key_file;
  std::uint32_t sync_interval_ms = 500;

  // Throws kInvalidConfig. Creates data_dir if missing and checks that it is
  // writable.
  void validate() const;
};

// `key = value` lines. A non-empty `env_data_dir` replaces data_dir.
NodeConfig parse_node_config(std::string_view text, const char* env_data_dir = nullptr);
// Reads the file and applies the DHP_DATA_DIR environment override.
NodeConfig load_node_config(const std::string& path);

std::pair<std::string, int> split_host_port(std::string_view address);

// One line: `role hex_id hex_public hex_secret`.
std::string format_key(const KeyPair& key);
KeyPair parse_key(std::string_view text);
KeyPair load_key(const std::string& path);
// Written with owner-only permissions.
void save_key(const std::string& path, const KeyPair& key);

inline constexpr std::size_t kNonceSize = 16;
inline constexpr std::string_view kAuthTag = "DHPAUTH1|";

struct Credential {
  MemberId member{};
  Bytes nonce;
  Signature signature;
};

// "DHPAUTH1|" ‖ nonce ‖ method ‖ "|" ‖ path ‖ "|" ‖ SHA-256(body).
Bytes auth_signing_bytes(ByteView nonce, std::string_view method, std::string_view path,
                         ByteView body);
Credential make_credential(const KeyPair& key, ByteView nonce, std::string_view method,
                           std::string_view path, ByteView body);

struct VerifyRequest {
  DhpToken token;
  TravelDocument doc;
  UtcSeconds at{};
  bool operator==(const VerifyRequest&) const = default;
};

inline constexpr std::string_view kVerifyRequestTag = "DHPVQ1|";
inline constexpr std::string_view kVerifyResponseTag = "DHPVR1|";

// "DHPVQ1|" ‖ token ‖ u16 len ‖ canonical doc bytes ‖ i64 at.
Bytes encode_verify_request(const VerifyRequest& request);
VerifyRequest decode_verify_request(ByteView bytes);
// "DHPVR1|" ‖ u8 status ‖ u8 violation (0 = none) ‖ u8 located ‖ u64 height ‖
// u32 index ‖ i64 checked_at ‖ receipt frame.
Bytes encode_verification(const Verification& v);
Verification decode_verification(ByteView bytes);

struct Request {
  std::string method;  // "GET" or "POST"
  std::string path;
  Bytes body;
  std::optional<Credential> credential;
};

struct Response {
  int status = 200;
  Bytes body;  // canonical frame on 2xx, UTF-8 message otherwise

  bool ok() const { return status >= 200 && status < 300; }
  std::string text() const { return std::string(body.begin(), body.end()); }
};

struct NodeOptions {
  Role role = Role::kHsa;
  std::shared_ptr<const Registry> registry;
  KeyPair key;
  std::optional<HygienePolicy> policy;
  std::string data_dir;
  ChainConfig chain;
  std::function<UtcSeconds()> clock;
};

NodeOptions load_node_options(const NodeConfig& config);

// Routes:
//   GET  /challenge            fresh single-use nonce (no credential)
//   POST /submit_dhp           THF -> home HSA, PendingDhp frame; body of the
//                              reply is the 32-byte ack id
//   GET  /token/<ack hex>      submitting THF; 202 until included
//   POST /relay_dhp            HSA -> HSA, record frame
//   POST /blocks               HSA -> any node, block frame
//   GET  /head                 tip header frame
//   GET  /block/<hash hex>     block frame
//   GET  /blocks/at/<height>   block frame
//   POST /verify               BM -> BM node, VerifyRequest frame
// Every route except /challenge requires a credential over a nonce issued by
// this node.
class NodeService {
 public:
  explicit NodeService(NodeOptions options);

  Response handle(const Request& request);
  Bytes issue_challenge();

  // Proposes from the mempool when this HSA holds the next slot.
  std::optional<Block> propose_if_scheduled();
  // Appends a block received from a peer. Returns nullopt when appended or
  // already present.
  std::optional<ValidationError> accept_block(const Block& block);
  // Records accepted from THFs since the last call.
  std::vector<HealthPassport> take_relay_queue();

  std::shared_ptr<const ChainState> snapshot() const;
  std::size_t mempool_size() const;
  const KeyPair& key() const { return opts_.key; }
  Role role() const { return opts_.role; }
  std::uint64_t recovered_frames() const { return recovered_frames_; }
  bool recovered_torn_tail() const { return recovered_torn_tail_; }
  std::string block_log_path() const;
  std::string receipt_log_path() const;

 private:
  struct Home {
    Salt salt;
    MemberId thf{};
  };

  std::optional<ActorId> authenticate(const Request& request);
  Response submit_dhp(const ActorId& caller, ByteView body);
  Response relay_dhp(const ActorId& caller, ByteView body);
  Response get_token(const ActorId& caller, std::string_view ack_hex);
  Response push_block(const ActorId& caller, ByteView body);
  Response get_head() const;
  Response get_block(std::string_view hash_hex) const;
  Response get_block_at(std::string_view height) const;
  Response verify(const ActorId& caller, ByteView body);
  // Shared record checks for submit and relay; nullopt when acceptable.
  std::optional<Response> admit(const HealthPassport& record, bool* already_known);
  std::optional<ValidationError> append_locked(Block block);

  NodeOptions opts_;

  mutable std::mutex snapshot_mu_;
  std::shared_ptr<const ChainState> snapshot_;

  // Single writer: chain appends, the block log, and the mempool.
  mutable std::mutex write_mu_;
  std::unique_ptr<BlockLogWriter> block_log_;
  std::map<Digest, HealthPassport> mempool_;
  std::map<Digest, Home> home_;
  std::vector<HealthPassport> relay_queue_;

  std::mutex receipt_mu_;
  std::unique_ptr<FramedLogWriter> receipt_log_;

  std::mutex nonce_mu_;
  std::map<Bytes, UtcSeconds> nonces_;

  std::uint64_t recovered_frames_ = 0;
  bool recovered_torn_tail_ = false;
};

}  // namespace dhp::service
