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

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dhp {

enum class ErrorCode {
  kInvalidDocument,
  kEncodingError,
  kDecodeError,
  kMalformedKey,
  kEmptyAuthoritySet,
  kNotScheduled,
  kEmptyBatch,
  kBatchTooLarge,
  kInvalidPendingRecord,
  kValidationFailed,
  kNoValidCandidate,
  kNotRiskFree,
  kNotAuthorizedIssuer,
  kFutureTimestamp,
  kNotABlockchainMember,
  kBadReceiptSignature,
  kInvalidConfig,
  kInvalidRegistry,
  kIoError,
  kCorruptLog,
};

std::string_view to_string(ErrorCode code);

// Hard failure of an operation. Verification failures that are part of an
// operation's normal result (validation errors, lookup misses, policy
// violations) are returned as values instead.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  // Index of the offending element for kInvalidPendingRecord and
  // kBadReceiptSignature; byte offset for kCorruptLog.
  Error(ErrorCode code, const std::string& what, std::uint64_t detail)
      : Error(code, what) {
    detail_ = detail;
  }

  ErrorCode code() const noexcept { return code_; }
  std::uint64_t detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::uint64_t detail_ = 0;
};

}  // namespace dhp
