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

#include "chprune/error.h"

namespace chprune {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInfeasible:
      return "Infeasible";
    case ErrorCode::kTooLarge:
      return "TooLarge";
    case ErrorCode::kEmptyFront:
      return "EmptyFront";
    case ErrorCode::kCapacityOverflow:
      return "CapacityOverflow";
    case ErrorCode::kShapeMismatch:
      return "ShapeMismatch";
    case ErrorCode::kMissingImportance:
      return "MissingImportance";
    case ErrorCode::kLutMiss:
      return "LUTMiss";
    case ErrorCode::kStaleGradient:
      return "StaleGradient";
    case ErrorCode::kDegenerateBatch:
      return "DegenerateBatch";
    case ErrorCode::kInvalidArgument:
      return "InvalidArgument";
    case ErrorCode::kConfig:
      return "ConfigError";
  }
  return "Unknown";
}

}  // namespace chprune
