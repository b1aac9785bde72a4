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

#include "dhp/block_log.hpp"

#include <filesystem>

namespace dhp {

namespace {

struct Replay {
  ChainState state;
  FrameScan scan;
};

[[noreturn]] void corrupt(std::size_t frame_no, std::uint64_t offset, const std::string& why) {
  throw Error(ErrorCode::kCorruptLog,
              "frame " + std::to_string(frame_no) + " at offset " + std::to_string(offset) +
                  ": " + why,
              offset);
}

Replay replay(const std::string& path, std::shared_ptr<const Registry> registry,
              const ChainConfig& config, UtcSeconds now) {
  Replay r{ChainState(std::move(registry), config), {}};
  if (!std::filesystem::exists(path)) return r;
  Bytes file = read_file(path);
  r.scan = scan_frames(file, kBlockLogMagic);
  for (std::size_t i = 0; i < r.scan.frames.size(); ++i) {
    const Frame& f = r.scan.frames[i];
    Block block;
    try {
      block = decode_block(f.payload);
    } catch (const Error& e) {
      corrupt(i, f.offset, e.what());
    }
    if (auto err = r.state.append(std::move(block), now)) {
      corrupt(i, f.offset, std::string(to_string(*err)));
    }
  }
  return r;
}

}  // namespace

BlockLogRecovery recover_block_log(const std::string& path,
                                   std::shared_ptr<const Registry> registry,
                                   const ChainConfig& config, UtcSeconds now) {
  Replay r = replay(path, std::move(registry), config, now);
  BlockLogRecovery out{std::move(r.state), r.scan.frames.size(), r.scan.torn_tail};
  if (r.scan.torn_tail) {
    FramedLogWriter(path, kBlockLogMagic).truncate_to(r.scan.valid_end);
  }
  return out;
}

ChainAudit audit_block_log(const std::string& path,
                           std::shared_ptr<const Registry> registry,
                           const ChainConfig& config, UtcSeconds now) {
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorCode::kIoError, "no block log at " + path);
  }
  Replay r = replay(path, std::move(registry), config, now);
  if (r.scan.torn_tail) {
    corrupt(r.scan.frames.size(), r.scan.torn_offset, "frame runs past end of file");
  }
  return ChainAudit{r.scan.frames.size(), r.state.height()};
}

}  // namespace dhp
