// Copyright 2026  The tse-forge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tse {

enum class ErrorCode {
  kInvalidArgument,
  kNotFound,
  kUnsupportedFormat,
  kIoError,
  kSilentInput,
  kZeroEnergy,
  kLengthMismatch,
  kEmptyPool,
  kNoiseTooShort,
  kParseError,
  kDuplicateId,
  kEmptyResult,
  kMissingGender,
  kBadMagic,
  kTruncatedFile,
  kDimensionOverflow,
  kZeroVector,
  kDimMismatch,
  kPoolTooSmall,
  kMissingEmbedding,
  kEmptyStage,
  kUnknownPool,
  kTooShort,
  kZeroTarget,
  kMissingEstimate,
};

inline std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kNotFound: return "NotFound";
    case ErrorCode::kUnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kSilentInput: return "SilentInput";
    case ErrorCode::kZeroEnergy: return "ZeroEnergy";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kEmptyPool: return "EmptyPool";
    case ErrorCode::kNoiseTooShort: return "NoiseTooShort";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kEmptyResult: return "EmptyResult";
    case ErrorCode::kMissingGender: return "MissingGender";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kTruncatedFile: return "TruncatedFile";
    case ErrorCode::kDimensionOverflow: return "DimensionOverflow";
    case ErrorCode::kZeroVector: return "ZeroVector";
    case ErrorCode::kDimMismatch: return "DimMismatch";
    case ErrorCode::kPoolTooSmall: return "PoolTooSmall";
    case ErrorCode::kMissingEmbedding: return "MissingEmbedding";
    case ErrorCode::kEmptyStage: return "EmptyStage";
    case ErrorCode::kUnknownPool: return "UnknownPool";
    case ErrorCode::kTooShort: return "TooShort";
    case ErrorCode::kZeroTarget: return "ZeroTarget";
    case ErrorCode::kMissingEstimate: return "MissingEstimate";
  }
  return "Unknown";
}

/// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string &what)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Re-throws `e` with `context` prepended, keeping the code.
[[noreturn]] inline void RethrowWithContext(const Error &e,
                                            const std::string &context) {
  std::string msg = e.what();
  auto colon = msg.find(": ");
  if (colon != std::string::npos) msg = msg.substr(colon + 2);
  throw Error(e.code(), context + ": " + msg);
}

}  // namespace tse
