// Copyright 2026 The cmivf Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cmivf/error.hpp"

namespace cmivf {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kOk: return "Ok";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kZeroVector: return "ZeroVector";
    case ErrorCode::kDomainError: return "DomainError";
    case ErrorCode::kInvalidK: return "InvalidK";
    case ErrorCode::kEmptyPairs: return "EmptyPairs";
    case ErrorCode::kInvalidNProbe: return "InvalidNProbe";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kFormatError: return "FormatError";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kSingleCentroid: return "SingleCentroid";
    case ErrorCode::kTooFewAugmentations: return "TooFewAugmentations";
    case ErrorCode::kEmptyResult: return "EmptyResult";
    case ErrorCode::kNotADistribution: return "NotADistribution";
    case ErrorCode::kInternal: return "Internal";
  }
  return "Unknown";
}

void raise(ErrorCode code, const std::string& message) {
  throw Error(code, std::string(error_code_name(code)) + ": " + message);
}

void check_invariant(bool condition, const char* what) {
  if (!condition) raise(ErrorCode::kInternal, std::string("invariant violated: ") + what);
}

}  // namespace cmivf
