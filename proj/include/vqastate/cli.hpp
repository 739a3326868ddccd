// Copyright 2026 The vqastate Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "vqastate/config.hpp"

namespace vqastate {

// Process exit codes. recognize also returns the decision codes below.
inline constexpr int kExitPositive = 0;
inline constexpr int kExitNegative = 1;
inline constexpr int kExitIndeterminate = 2;
inline constexpr int kExitUsage = 64;
inline constexpr int kExitData = 65;
inline constexpr int kExitUnavailable = 69;
inline constexpr int kExitBind = 70;

/// Entry point behind the vqastate binary. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err, const EnvLookup& env);

}  // namespace vqastate
