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

#include "dhp/framed_log.hpp"

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <iterator>

namespace dhp {

FrameScan scan_frames(ByteView file, std::string_view magic) {
  FrameScan scan;
  if (file.empty()) return scan;
  if (file.size() < kFramedLogHeaderSize ||
      !std::equal(magic.begin(), magic.end(), file.begin(),
                  [](char a, std::uint8_t b) { return static_cast<std::uint8_t>(a) == b; }) ||
      file[4] != kFramedLogVersion) {
    throw Error(ErrorCode::kCorruptLog, "bad log header at offset 0", 0);
  }
  std::uint64_t pos = kFramedLogHeaderSize;
  while (pos < file.size()) {
    if (file.size() - pos < 4) {
      scan.torn_tail = true;
      scan.torn_offset = pos;
      break;
    }
    ByteReader len_reader(file.subspan(pos, 4));
    std::uint32_t len = len_reader.u32();
    if (file.size() - pos - 4 < len) {
      scan.torn_tail = true;
      scan.torn_offset = pos;
      break;
    }
    ByteView payload = file.subspan(pos + 4, len);
    scan.frames.push_back(Frame{pos, Bytes(payload.begin(), payload.end())});
    pos += 4 + len;
    scan.valid_end = pos;
  }
  return scan;
}

Bytes read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path);
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

FramedLogWriter::FramedLogWriter(const std::string& path, std::string_view magic)
    : path_(path) {
  std::error_code ec;
  bool fresh = !std::filesystem::exists(path, ec) || std::filesystem::file_size(path, ec) == 0;
  file_ = std::fopen(path.c_str(), fresh ? "wb" : "r+b");
  if (file_ == nullptr) throw Error(ErrorCode::kIoError, "cannot open " + path + " for append");
  if (fresh) {
    std::fwrite(magic.data(), 1, magic.size(), file_);
    std::fputc(kFramedLogVersion, file_);
    std::fflush(file_);
  }
  std::fseek(file_, 0, SEEK_END);
}

FramedLogWriter::~FramedLogWriter() {
  if (file_ != nullptr) std::fclose(file_);
}

FramedLogWriter::FramedLogWriter(FramedLogWriter&& other) noexcept
    : path_(std::move(other.path_)), file_(other.file_) {
  other.file_ = nullptr;
}

FramedLogWriter& FramedLogWriter::operator=(FramedLogWriter&& other) noexcept {
  if (this != &other) {
    if (file_ != nullptr) std::fclose(file_);
    path_ = std::move(other.path_);
    file_ = other.file_;
    other.file_ = nullptr;
  }
  return *this;
}

void FramedLogWriter::truncate_to(std::uint64_t offset) {
  std::fflush(file_);
  if (::ftruncate(::fileno(file_), static_cast<off_t>(offset)) != 0) {
    throw Error(ErrorCode::kIoError, "cannot truncate " + path_);
  }
  std::fseek(file_, 0, SEEK_END);
}

std::uint64_t FramedLogWriter::append(ByteView payload) {
  std::fseek(file_, 0, SEEK_END);
  auto offset = static_cast<std::uint64_t>(std::ftell(file_));
  ByteWriter len;
  len.put_u32(static_cast<std::uint32_t>(payload.size()));
  if (std::fwrite(len.bytes().data(), 1, 4, file_) != 4 ||
      std::fwrite(payload.data(), 1, payload.size(), file_) != payload.size() ||
      std::fflush(file_) != 0) {
    throw Error(ErrorCode::kIoError, "write failed on " + path_);
  }
  ::fsync(::fileno(file_));
  return offset;
}

}  // namespace dhp
