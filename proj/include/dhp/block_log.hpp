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

// Block-log persistence: "DHPB" v1 framed log of canonical blocks from
// height 1 upward. Genesis is implicit in the registry.

#pragma once

#include <memory>
#include <string>

#include "dhp/framed_log.hpp"
#include "dhp/ledger.hpp"

namespace dhp {

inline constexpr std::string_view kBlockLogMagic = "DHPB";

struct BlockLogRecovery {
  ChainState state;
  std::uint64_t frames_applied = 0;
  bool torn_tail_discarded = false;
};

// Replays the log at `path` through validate_block. A torn final frame is
// truncated away and never applied; any other bad frame throws kCorruptLog
// with detail() = the frame's byte offset. A missing file recovers to
// genesis.
BlockLogRecovery recover_block_log(const std::string& path,
                                   std::shared_ptr<const Registry> registry,
                                   const ChainConfig& config, UtcSeconds now);

struct ChainAudit {
  std::uint64_t frames = 0;
  std::uint64_t height = 0;
};

// Read-only full revalidation. Unlike recovery, a torn tail is an error.
ChainAudit audit_block_log(const std::string& path,
                           std::shared_ptr<const Registry> registry,
                           const ChainConfig& config, UtcSeconds now);

class BlockLogWriter {
 public:
  explicit BlockLogWriter(const std::string& path) : log_(path, kBlockLogMagic) {}
  void append(const Block& block) { log_.append(encode_block(block)); }

 private:
  FramedLogWriter log_;
};

}  // namespace dhp
