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

// HTTP/1.1 binding for NodeService. Bodies are single canonical frames
// (application/octet-stream); credentials travel in X-DHP-* headers.

#pragma once

#include <atomic>
#include <condition_variable>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "dhp/service.hpp"

namespace httplib {
class Server;
}

namespace dhp::service {

inline constexpr const char* kMemberHeader = "X-DHP-Member";
inline constexpr const char* kNonceHeader = "X-DHP-Nonce";
inline constexpr const char* kSignatureHeader = "X-DHP-Signature";

// Authenticated client for one peer. Each call fetches a fresh challenge.
class PeerClient {
 public:
  PeerClient(std::string address, KeyPair key);

  // Transport failures come back as status 0 with the error text.
  Response call(const std::string& method, const std::string& path, ByteView body = {});
  const std::string& address() const { return address_; }

 private:
  std::string address_;
  std::string host_;
  int port_ = 0;
  KeyPair key_;
};

class NodeDaemon {
 public:
  NodeDaemon(NodeOptions options, std::string listen_address,
             std::vector<std::string> peer_addresses, std::uint32_t sync_interval_ms);
  explicit NodeDaemon(const NodeConfig& config);
  ~NodeDaemon();

  NodeDaemon(const NodeDaemon&) = delete;
  NodeDaemon& operator=(const NodeDaemon&) = delete;

  // Binds (port 0 picks a free port) and starts the server and sync threads.
  void start();
  void stop();
  int port() const { return port_; }
  // For peers whose port is only known after they start.
  void add_peer(const std::string& address);

  // One pass of peer sync, proposal, and relay. The sync thread calls this
  // every interval; tests call it directly.
  void tick();

  NodeService& service() { return service_; }

 private:
  void sync_from(PeerClient& peer);

  NodeService service_;
  std::string listen_address_;
  std::vector<PeerClient> peers_;
  std::uint32_t sync_interval_ms_;
  std::unique_ptr<httplib::Server> server_;
  int port_ = 0;
  std::thread server_thread_;
  std::thread sync_thread_;
  std::mutex tick_mu_;
  std::mutex stop_mu_;
  std::condition_variable stop_cv_;
  bool stopping_ = false;
};

}  // namespace dhp::service
