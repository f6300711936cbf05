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

#ifndef CHPRUNE_VERIFY_H_
#define CHPRUNE_VERIFY_H_

// Randomized property suites run by `chprune verify <suite>`.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "chprune/io.h"

namespace chprune {

struct CheckOutcome {
  std::string name;
  bool passed = true;
  std::int64_t cases = 0;
  // First failure, or a one-line summary of what was measured.
  std::string detail;
};

struct VerifyReport {
  std::string suite;
  std::uint64_t seed = 0;
  std::vector<CheckOutcome> checks;

  bool passed() const;
  Json ToJson() const;
};

// Solver suite.
CheckOutcome CheckMckOracle(int instances, std::uint64_t seed);
CheckOutcome CheckDpAgreement(int instances, std::uint64_t seed);
CheckOutcome CheckMergeSoundness(int instances, std::uint64_t seed);
CheckOutcome CheckKnapsackDegeneration(int instances, std::uint64_t seed);

// Differentiation suite.
CheckOutcome CheckGradientIdentity(int nets, std::uint64_t seed);
CheckOutcome CheckFiniteDifferences(int nets, std::uint64_t seed);
CheckOutcome CheckStraightThrough(int layers, std::uint64_t seed);
CheckOutcome CheckBnScaling();

// Schedule suite.
CheckOutcome CheckScheduleTargets(int schedules, std::uint64_t seed);
CheckOutcome CheckAccumulator(int trials, std::uint64_t seed);

// Allocation suite.
CheckOutcome CheckEncoderRoundTrip(int cases, std::uint64_t seed);

// `suite` is one of mck, micrograd, schedule, allocation or all. Throws
// Error(kConfig) for anything else.
VerifyReport RunVerify(std::string_view suite, std::uint64_t seed);

}  // namespace chprune

#endif  // CHPRUNE_VERIFY_H_
