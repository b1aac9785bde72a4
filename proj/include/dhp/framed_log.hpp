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

// Append-only files of length-prefixed frames: a 4-byte magic, a version
// byte, then repeated `u32-BE length ‖ payload`.

#pragma once

#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "dhp/bytes.hpp"

namespace dhp {

inline constexpr std::uint8_t kFramedLogVersion = 1;
inline constexpr std::size_t kFramedLogHeaderSize = 5;

struct Frame {
  std::uint64_t offset = 0;  // of the length prefix
  Bytes payload;
};

struct FrameScan {
  std::vector<Frame> frames;
  // End of the last complete frame.
  std::uint64_t valid_end = kFramedLogHeaderSize;
  // A trailing frame whose length prefix or payload runs past end of file.
  bool torn_tail = false;
  std::uint64_t torn_offset = 0;
};

// Throws kCorruptLog (detail() = 0) if the magic or version is wrong.
// An empty input is treated as a log with no frames.
FrameScan scan_frames(ByteView file, std::string_view magic);

Bytes read_file(const std::string& path);

// Single-writer appender. Creates the file with its header if it is missing
// or empty.
class FramedLogWriter {
 public:
  FramedLogWriter(const std::string& path, std::string_view magic);
  ~FramedLogWriter();
  FramedLogWriter(const FramedLogWriter&) = delete;
  FramedLogWriter& operator=(const FramedLogWriter&) = delete;
  FramedLogWriter(FramedLogWriter&& other) noexcept;
  FramedLogWriter& operator=(FramedLogWriter&& other) noexcept;

  // Drops everything past `offset` (used to discard a torn tail).
  void truncate_to(std::uint64_t offset);
  // Appends and flushes one frame; returns its offset.
  std::uint64_t append(ByteView payload);

  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::FILE* file_ = nullptr;
};

}  // namespace dhp
