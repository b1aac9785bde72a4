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

// dhp: command-line front end for every consortium role and the simulator.
//
// Exit status: 0 on success, 1 on any error, 2 when a command ran but its
// finding is negative (non-Valid verification, missing receipts, liveness
// violations).

#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "dhp/block_log.hpp"
#include "dhp/http.hpp"
#include "dhp/kv.hpp"
#include "dhp/netsim.hpp"
#include "dhp/service.hpp"

namespace {

using namespace dhp;
namespace fs = std::filesystem;

constexpr int kNegative = 2;

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

UtcSeconds now_utc() {
  return std::chrono::time_point_cast<std::chrono::seconds>(std::chrono::system_clock::now());
}

// Unix seconds, or YYYY-MM-DDTHH:MM:SSZ.
UtcSeconds parse_time(const std::string& text) {
  if (!text.empty() && text.find('-', 1) == std::string::npos) {
    return utc_seconds(parse_integer("time", text));
  }
  if (text.size() != 20 || text[10] != 'T' || text[13] != ':' || text[16] != ':' ||
      text[19] != 'Z') {
    throw Error(ErrorCode::kInvalidConfig, "time '" + text + "' is not YYYY-MM-DDTHH:MM:SSZ");
  }
  auto field = [&](std::size_t pos, long long max) {
    long long v = parse_integer("time", text.substr(pos, 2));
    if (v < 0 || v > max) throw Error(ErrorCode::kInvalidConfig, "bad time '" + text + "'");
    return v;
  };
  return UtcSeconds(parse_date(text.substr(0, 10))) + std::chrono::hours{field(11, 23)} +
         std::chrono::minutes{field(14, 59)} + std::chrono::seconds{field(17, 59)};
}

bool parse_result(const std::string& text) {
  if (text == "risk-free" || text == "negative" || text == "true") return true;
  if (text == "positive" || text == "false") return false;
  throw Error(ErrorCode::kInvalidConfig, "result must be risk-free or positive");
}

std::string read_trimmed(const std::string& path) {
  std::string text = read_text_file(path);
  auto end = text.find_last_not_of(" \t\r\n");
  return end == std::string::npos ? std::string() : text.substr(0, end + 1);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out || !(out << text).flush()) throw Error(ErrorCode::kIoError, "cannot write " + path);
}

struct DocArgs {
  std::string number;
  std::string country;
  std::string expiry;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--doc-number", number, "Travel document number")->required();
    cmd->add_option("--country", country, "Issuing country (ISO alpha-3)")->required();
    cmd->add_option("--expiry", expiry, "Document expiry, YYYY-MM-DD")->required();
  }
  TravelDocument doc() const {
    TravelDocument d{number, country, parse_date(expiry)};
    validate(d);
    return d;
  }
};

std::shared_ptr<const Registry> load_registry(const std::string& path) {
  return std::make_shared<const Registry>(Registry::load(path));
}

int run_daemon(const std::string& config_path, Role expected) {
  service::NodeConfig config = service::load_node_config(config_path);
  if (config.role != expected) {
    throw Error(ErrorCode::kInvalidConfig, "config is for a " +
                                               std::string(role_name(config.role)) + " node");
  }
  service::NodeDaemon daemon(config);
  std::cerr << "recovered " << daemon.service().recovered_frames() << " blocks from "
            << daemon.service().block_log_path()
            << (daemon.service().recovered_torn_tail() ? " (torn tail discarded)" : "") << "\n";
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  daemon.start();
  std::cerr << role_name(config.role) << " node " << to_hex(daemon.service().key().owner.id)
            << " listening on port " << daemon.port() << "\n";
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(200));
  daemon.stop();
  return 0;
}

void print_verification(const Verification& v) {
  std::cout << to_string(v.outcome.status);
  if (v.outcome.violation_reason) std::cout << "/" << to_string(*v.outcome.violation_reason);
  std::cout << "\n";
  if (v.outcome.dhp_location) {
    std::cout << "location " << v.outcome.dhp_location->height << ":"
              << v.outcome.dhp_location->index << "\n";
  }
  std::cout << "receipt " << receipt_id(v.receipt) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DHP consortium tool"};
  app.require_subcommand(1);

  // keygen
  auto* keygen_cmd = app.add_subcommand("keygen", "Generate a member key pair");
  std::string kg_role, kg_out, kg_seed;
  keygen_cmd->add_option("--role", kg_role, "thf, hsa or bm")
      ->required()
      ->check(CLI::IsMember({"thf", "hsa", "bm"}));
  keygen_cmd->add_option("--out", kg_out, "Secret key file; the public line goes to <out>.pub")
      ->required();
  keygen_cmd->add_option("--seed", kg_seed, "32-byte hex seed (deterministic keys)");

  // registry
  auto* registry_cmd = app.add_subcommand("registry", "Consortium registry");
  registry_cmd->require_subcommand(1);
  auto* reg_add = registry_cmd->add_subcommand("add", "Add a member");
  std::string reg_file, reg_member, reg_home;
  reg_add->add_option("--registry", reg_file, "Registry file (created if missing)")->required();
  reg_add->add_option("--member", reg_member, "Key or .pub file of the new member")->required();
  reg_add->add_option("--home-hsa", reg_home, "Home HSA id (THFs)");
  auto* reg_list = registry_cmd->add_subcommand("list", "List members");
  reg_list->add_option("--registry", reg_file, "Registry file")->required();

  // thf
  auto* thf_cmd = app.add_subcommand("thf", "Testing facility actions");
  thf_cmd->require_subcommand(1);
  auto* thf_issue_cmd = thf_cmd->add_subcommand("issue", "Issue a signed pending DHP");
  DocArgs issue_doc;
  std::string ti_key, ti_method, ti_result, ti_tested, ti_salt, ti_out, ti_submit;
  thf_issue_cmd->add_option("--key", ti_key, "THF key file")->required();
  issue_doc.add_to(thf_issue_cmd);
  thf_issue_cmd->add_option("--method", ti_method, "Test method code")->required();
  thf_issue_cmd->add_option("--result", ti_result, "risk-free or positive")->required();
  thf_issue_cmd->add_option("--tested-at", ti_tested, "Sample time (default now)");
  thf_issue_cmd->add_option("--salt", ti_salt, "16-byte hex salt (default random)");
  thf_issue_cmd->add_option("--out", ti_out, "Also write the frame hex here");
  thf_issue_cmd->add_option("--submit", ti_submit, "Submit to this HSA node (host:port)");
  auto* thf_token_cmd = thf_cmd->add_subcommand("token", "Fetch the token for an ack id");
  std::string tt_key, tt_hsa, tt_ack;
  thf_token_cmd->add_option("--key", tt_key, "THF key file")->required();
  thf_token_cmd->add_option("--hsa", tt_hsa, "HSA node (host:port)")->required();
  thf_token_cmd->add_option("--ack", tt_ack, "Ack id returned on submission")->required();

  // hsa
  auto* hsa_cmd = app.add_subcommand("hsa", "Health service authority actions");
  hsa_cmd->require_subcommand(1);
  auto* hsa_run = hsa_cmd->add_subcommand("run", "Run an HSA node");
  std::string run_config;
  hsa_run->add_option("--config", run_config, "Node config file")->required();
  auto* hsa_register_cmd =
      hsa_cmd->add_subcommand("register", "Append pending DHPs to a local block log");
  std::string hr_key, hr_registry, hr_data_dir, hr_now;
  std::vector<std::string> hr_pending;
  hsa_register_cmd->add_option("--key", hr_key, "HSA key file")->required();
  hsa_register_cmd->add_option("--registry", hr_registry, "Registry file")->required();
  hsa_register_cmd->add_option("--data-dir", hr_data_dir, "Node data directory")->required();
  hsa_register_cmd->add_option("--now", hr_now, "Block time (default now)");
  hsa_register_cmd->add_option("pending", hr_pending, "Files holding pending DHP hex")
      ->required();

  // bm
  auto* bm_cmd = app.add_subcommand("bm", "Blockchain member actions");
  bm_cmd->require_subcommand(1);
  auto* bm_run = bm_cmd->add_subcommand("run", "Run a BM replica node");
  bm_run->add_option("--config", run_config, "Node config file")->required();
  auto* bm_verify_cmd = bm_cmd->add_subcommand("verify", "Verify a traveller's DHP");
  DocArgs verify_doc;
  std::string bv_token, bv_policy, bv_key, bv_registry, bv_data_dir, bv_node, bv_at, bv_receipts;
  bm_verify_cmd->add_option("--token", bv_token, "DHP token hex")->required();
  verify_doc.add_to(bm_verify_cmd);
  bm_verify_cmd->add_option("--policy", bv_policy, "Hygiene policy file")->required();
  bm_verify_cmd->add_option("--key", bv_key, "BM key file")->required();
  bm_verify_cmd->add_option("--registry", bv_registry, "Registry file (local mode)");
  bm_verify_cmd->add_option("--data-dir", bv_data_dir, "Local replica directory");
  bm_verify_cmd->add_option("--node", bv_node, "BM node to ask instead (host:port)");
  bm_verify_cmd->add_option("--at", bv_at, "Travel time (default now)");
  bm_verify_cmd->add_option("--receipts", bv_receipts, "Receipt log to append (local mode)");

  // sim
  auto* sim_cmd = app.add_subcommand("sim", "Network simulator");
  sim_cmd->require_subcommand(1);
  auto* sim_run = sim_cmd->add_subcommand("run", "Run a simulation");
  std::string sim_config, sim_report;
  sim_run->add_option("--config", sim_config, "Simulation config file")->required();
  sim_run->add_option("--report", sim_report, "Write the per-DHP delay report here");

  // chain
  auto* chain_cmd = app.add_subcommand("chain", "Chain maintenance");
  chain_cmd->require_subcommand(1);
  auto* chain_audit = chain_cmd->add_subcommand("audit", "Revalidate a block log from genesis");
  std::string ca_data_dir, ca_registry;
  chain_audit->add_option("--data-dir", ca_data_dir, "Node data directory")->required();
  chain_audit->add_option("--registry", ca_registry,
                          "Registry file (default <data-dir>/registry.txt)");

  // audit
  auto* audit_cmd = app.add_subcommand("audit", "Accountability audits");
  audit_cmd->require_subcommand(1);
  auto* audit_manifest_cmd =
      audit_cmd->add_subcommand("manifest", "Match a passenger manifest against receipts");
  std::string am_receipts, am_manifest, am_registry;
  audit_manifest_cmd->add_option("--receipts", am_receipts, "Receipt log")->required();
  audit_manifest_cmd->add_option("--manifest", am_manifest, "Manifest file")->required();
  audit_manifest_cmd->add_option("--registry", am_registry, "Registry file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Usage errors share exit code 1 with every other failure.
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (keygen_cmd->parsed()) {
      std::optional<KeySeed> seed;
      if (!kg_seed.empty()) seed = fixed_from_hex<32>(kg_seed);
      KeyPair key = keygen(parse_role(kg_role), seed);
      service::save_key(kg_out, key);
      write_text(kg_out + ".pub", kg_role + " " + to_hex(key.owner.id) + " " +
                                      to_hex(key.public_key) + "\n");
      std::cout << to_hex(key.owner.id) << "\n";
      return 0;
    }

    if (reg_add->parsed()) {
      Registry registry = fs::exists(reg_file) ? Registry::load(reg_file) : Registry{};
      std::istringstream in(read_text_file(reg_member));
      std::string role, id, pub;
      if (!(in >> role >> id >> pub)) {
        throw Error(ErrorCode::kInvalidRegistry, reg_member + " is not a key or .pub file");
      }
      Member m{ActorId{parse_role(role), fixed_from_hex<16>(id)}, fixed_from_hex<32>(pub),
               std::nullopt};
      if (!reg_home.empty()) m.home_hsa = fixed_from_hex<16>(reg_home);
      registry.add(std::move(m));
      registry.save(reg_file);
      return 0;
    }

    if (reg_list->parsed()) {
      std::cout << Registry::load(reg_file).serialize();
      return 0;
    }

    if (thf_issue_cmd->parsed()) {
      KeyPair key = service::load_key(ti_key);
      const UtcSeconds now = now_utc();
      std::optional<Salt> salt;
      if (!ti_salt.empty()) salt = Salt{fixed_from_hex<16>(ti_salt)};
      PendingDhp pending =
          thf_issue(key, issue_doc.doc(), parse_result(ti_result),
                    TestMethod::from_code(ti_method),
                    ti_tested.empty() ? now : parse_time(ti_tested), now, salt);
      const std::string hex = to_hex(encode_pending(pending));
      std::cout << hex << "\n";
      if (!ti_out.empty()) write_text(ti_out, hex + "\n");
      if (!ti_submit.empty()) {
        service::PeerClient hsa(ti_submit, key);
        auto r = hsa.call("POST", "/submit_dhp", encode_pending(pending));
        if (!r.ok()) throw Error(ErrorCode::kIoError, "submission failed (" +
                                                          std::to_string(r.status) + "): " + r.text());
        std::cout << "ack " << to_hex(r.body) << "\n";
      }
      return 0;
    }

    if (thf_token_cmd->parsed()) {
      service::PeerClient hsa(tt_hsa, service::load_key(tt_key));
      auto r = hsa.call("GET", "/token/" + tt_ack);
      if (r.status == 202) {
        std::cout << "pending\n";
        return kNegative;
      }
      if (!r.ok()) throw Error(ErrorCode::kIoError, "token request failed (" +
                                                        std::to_string(r.status) + "): " + r.text());
      std::cout << to_hex(r.body) << "\n";
      return 0;
    }

    if (hsa_run->parsed()) return run_daemon(run_config, Role::kHsa);
    if (bm_run->parsed()) return run_daemon(run_config, Role::kBm);

    if (hsa_register_cmd->parsed()) {
      KeyPair key = service::load_key(hr_key);
      const UtcSeconds now = hr_now.empty() ? now_utc() : parse_time(hr_now);
      auto registry = load_registry(hr_registry);
      fs::create_directories(hr_data_dir);
      const std::string log_path = (fs::path(hr_data_dir) / "blocks.log").string();
      auto recovered = recover_block_log(log_path, registry, ChainConfig{}, now);
      std::vector<PendingDhp> pending;
      for (const auto& file : hr_pending) pending.push_back(decode_pending(from_hex(read_trimmed(file))));
      ChainState state = std::move(recovered.state);
      auto tokens = hsa_register(key, state, pending, now);
      BlockLogWriter(log_path).append(state.tip());
      for (const auto& t : tokens) std::cout << to_hex(encode_token(t)) << "\n";
      return 0;
    }

    if (bm_verify_cmd->parsed()) {
      KeyPair key = service::load_key(bv_key);
      HygienePolicy policy = parse_policy(read_text_file(bv_policy));
      DhpToken token = decode_token(from_hex(bv_token));
      const UtcSeconds at = bv_at.empty() ? now_utc() : parse_time(bv_at);
      Verification v;
      if (!bv_node.empty()) {
        service::PeerClient node(bv_node, key);
        auto r = node.call("POST", "/verify",
                           service::encode_verify_request({token, verify_doc.doc(), at}));
        if (!r.ok()) throw Error(ErrorCode::kIoError, "verify request failed (" +
                                                          std::to_string(r.status) + "): " + r.text());
        v = service::decode_verification(r.body);
      } else {
        if (bv_data_dir.empty()) {
          throw Error(ErrorCode::kInvalidConfig, "bm verify needs --data-dir or --node");
        }
        const std::string registry_path =
            bv_registry.empty() ? (fs::path(bv_data_dir) / "registry.txt").string() : bv_registry;
        auto recovered = recover_block_log((fs::path(bv_data_dir) / "blocks.log").string(),
                                           load_registry(registry_path), ChainConfig{}, now_utc());
        v = bm_verify(key, recovered.state, token, verify_doc.doc(), policy, at);
        if (!bv_receipts.empty()) {
          FramedLogWriter(bv_receipts, kReceiptLogMagic).append(encode_receipt(v.receipt));
        }
      }
      print_verification(v);
      return v.outcome.status == VerificationStatus::kValid ? 0 : kNegative;
    }

    if (sim_run->parsed()) {
      sim::SimConfig config = sim::parse_sim_config(read_text_file(sim_config));
      sim::SimReport report = sim::run_simulation(config);
      if (!sim_report.empty()) write_text(sim_report, sim::format_report(report));
      std::cout << sim::summarize(report);
      auto violations = sim::check_theta_liveness(report, config.theta);
      std::cout << "theta-liveness (" << config.theta << "): "
                << (violations.empty() ? "ok" : std::to_string(violations.size()) + " violations")
                << "\n";
      return violations.empty() && report.consistency ? 0 : kNegative;
    }

    if (chain_audit->parsed()) {
      const std::string registry_path =
          ca_registry.empty() ? (fs::path(ca_data_dir) / "registry.txt").string() : ca_registry;
      auto audit = audit_block_log((fs::path(ca_data_dir) / "blocks.log").string(),
                                   load_registry(registry_path), ChainConfig{}, now_utc());
      std::cout << "ok: " << audit.frames << " frames, height " << audit.height << "\n";
      return 0;
    }

    if (audit_manifest_cmd->parsed()) {
      Registry registry = Registry::load(am_registry);
      auto receipts = read_receipt_log(am_receipts);
      auto manifest = parse_manifest(read_text_file(am_manifest));
      auto missing = audit_manifest(registry, receipts, manifest);
      std::cout << manifest.size() << " travellers, " << receipts.size() << " receipts, "
                << missing.size() << " missing\n";
      for (const auto& m : missing) {
        std::cout << "missing " << to_hex(m.header_hash) << " " << m.record_index << "\n";
      }
      return missing.empty() ? 0 : kNegative;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
