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

#pragma once

#include <stdexcept>
#include <string>

namespace cmivf {

// Numeric values are part of the C ABI (see cmivf.h); append only.
enum class ErrorCode : int {
  kOk = 0,
  kInvalidArgument = 1,
  kDimensionMismatch = 2,
  kZeroVector = 3,
  kDomainError = 4,
  kInvalidK = 5,
  kEmptyPairs = 6,
  kInvalidNProbe = 7,
  kIoError = 8,
  kFormatError = 9,
  kConfigError = 10,
  kSingleCentroid = 11,
  kTooFewAugmentations = 12,
  kEmptyResult = 13,
  kNotADistribution = 14,
  kInternal = 15,
};

const char* error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void raise(ErrorCode code, const std::string& message);

// Throws kInternal; used for invariants that must hold after an operation.
void check_invariant(bool condition, const char* what);

}  // namespace cmivf
