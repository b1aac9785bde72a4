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

#include "dhp/http.hpp"

#include <httplib.h>

#include <iostream>

namespace dhp::service {

namespace {

constexpr const char* kOctets = "application/octet-stream";

Request to_request(const httplib::Request& req) {
  Request out;
  out.method = req.method;
  out.path = req.path;
  out.body.assign(req.body.begin(), req.body.end());
  if (req.has_header(kMemberHeader) && req.has_header(kNonceHeader) &&
      req.has_header(kSignatureHeader)) {
    try {
      Credential c;
      c.member = fixed_from_hex<16>(req.get_header_value(kMemberHeader));
      c.nonce = from_hex(req.get_header_value(kNonceHeader));
      c.signature = from_hex(req.get_header_value(kSignatureHeader));
      out.credential = std::move(c);
    } catch (const Error&) {
      // Malformed credentials are treated as absent.
    }
  }
  return out;
}

void log_line(const std::string& line) { std::cerr << "[dhp] " << line << "\n"; }

}  // namespace

PeerClient::PeerClient(std::string address, KeyPair key)
    : address_(std::move(address)), key_(std::move(key)) {
  std::tie(host_, port_) = split_host_port(address_);
}

Response PeerClient::call(const std::string& method, const std::string& path, ByteView body) {
  httplib::Client client(host_, port_);
  client.set_connection_timeout(2);
  client.set_read_timeout(10);
  auto challenge = client.Get("/challenge");
  if (!challenge) {
    std::string why = httplib::to_string(challenge.error());
    return Response{0, Bytes(why.begin(), why.end())};
  }
  if (challenge->status != 200) {
    return Response{challenge->status, Bytes(challenge->body.begin(), challenge->body.end())};
  }
  Bytes nonce(challenge->body.begin(), challenge->body.end());
  Credential c = make_credential(key_, nonce, method, path, body);
  httplib::Headers headers{{kMemberHeader, to_hex(c.member)},
                           {kNonceHeader, to_hex(c.nonce)},
                           {kSignatureHeader, to_hex(c.signature)}};
  httplib::Result result;
  if (method == "GET") {
    result = client.Get(path, headers);
  } else {
    std::string payload(body.begin(), body.end());
    result = client.Post(path, headers, payload, kOctets);
  }
  if (!result) {
    std::string why = httplib::to_string(result.error());
    return Response{0, Bytes(why.begin(), why.end())};
  }
  return Response{result->status, Bytes(result->body.begin(), result->body.end())};
}

NodeDaemon::NodeDaemon(NodeOptions options, std::string listen_address,
                       std::vector<std::string> peer_addresses, std::uint32_t sync_interval_ms)
    : service_(std::move(options)),
      listen_address_(std::move(listen_address)),
      sync_interval_ms_(sync_interval_ms) {
  split_host_port(listen_address_);
  for (auto& p : peer_addresses) peers_.emplace_back(std::move(p), service_.key());
}

NodeDaemon::NodeDaemon(const NodeConfig& config)
    : NodeDaemon(load_node_options(config), config.listen_address, config.peer_addresses,
                 config.sync_interval_ms) {}

NodeDaemon::~NodeDaemon() { stop(); }

void NodeDaemon::start() {
  server_ = std::make_unique<httplib::Server>();
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    Response r = service_.handle(to_request(req));
    res.status = r.status;
    res.set_content(std::string(r.body.begin(), r.body.end()),
                    r.ok() ? kOctets : "text/plain; charset=utf-8");
  };
  server_->Get(R"(/.*)", handler);
  server_->Post(R"(/.*)", handler);
  auto [host, port] = split_host_port(listen_address_);
  if (port == 0) {
    port_ = server_->bind_to_any_port(host);
  } else {
    port_ = server_->bind_to_port(host, port) ? port : -1;
  }
  if (port_ < 0) {
    throw Error(ErrorCode::kIoError, "cannot listen on " + listen_address_);
  }
  server_thread_ = std::thread([this] { server_->listen_after_bind(); });
  sync_thread_ = std::thread([this] {
    std::unique_lock lock(stop_mu_);
    while (!stopping_) {
      lock.unlock();
      try {
        tick();
      } catch (const std::exception& e) {
        log_line(std::string("tick failed: ") + e.what());
      }
      lock.lock();
      stop_cv_.wait_for(lock, std::chrono::milliseconds(sync_interval_ms_),
                        [this] { return stopping_; });
    }
  });
}

void NodeDaemon::stop() {
  {
    std::lock_guard lock(stop_mu_);
    stopping_ = true;
  }
  stop_cv_.notify_all();
  if (server_) server_->stop();
  if (server_thread_.joinable()) server_thread_.join();
  if (sync_thread_.joinable()) sync_thread_.join();
}

void NodeDaemon::sync_from(PeerClient& peer) {
  Response head = peer.call("GET", "/head");
  if (!head.ok()) return;
  const std::uint64_t peer_height = decode_header(head.body).height;
  while (service_.snapshot()->height() < peer_height) {
    const std::uint64_t next = service_.snapshot()->height() + 1;
    Response r = peer.call("GET", "/blocks/at/" + std::to_string(next));
    if (!r.ok()) return;
    if (auto err = service_.accept_block(decode_block(r.body))) {
      log_line("block " + std::to_string(next) + " from " + peer.address() +
               " rejected: " + std::string(to_string(*err)));
      return;
    }
  }
}

void NodeDaemon::add_peer(const std::string& address) {
  std::lock_guard lock(tick_mu_);
  peers_.emplace_back(address, service_.key());
}

void NodeDaemon::tick() {
  std::lock_guard lock(tick_mu_);
  for (auto& peer : peers_) sync_from(peer);
  if (auto block = service_.propose_if_scheduled()) {
    Bytes frame = encode_block(*block);
    log_line("proposed block " + std::to_string(block->header.height) + " with " +
             std::to_string(block->records.size()) + " records");
    for (auto& peer : peers_) peer.call("POST", "/blocks", frame);
  }
  for (const auto& record : service_.take_relay_queue()) {
    Bytes frame = encode_record(record);
    // BM peers answer 404; they learn the record from blocks.
    for (auto& peer : peers_) peer.call("POST", "/relay_dhp", frame);
  }
}

}  // namespace dhp::service
