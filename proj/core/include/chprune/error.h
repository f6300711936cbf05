// Copyright 2026 The chprune Authors
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

#ifndef CHPRUNE_ERROR_H_
#define CHPRUNE_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace chprune {

enum class ErrorCode {
  kInfeasible,
  kTooLarge,
  kEmptyFront,
  kCapacityOverflow,
  kShapeMismatch,
  kMissingImportance,
  kLutMiss,
  kStaleGradient,
  kDegenerateBatch,
  kInvalidArgument,
  kConfig,
};

std::string_view ErrorCodeName(ErrorCode code);

// All recoverable failures in the library are reported as an Error carrying
// one of the codes above; callers switch on code() rather than on message text.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace chprune

#endif  // CHPRUNE_ERROR_H_
