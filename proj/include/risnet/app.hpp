// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "risnet/predictors.hpp"

namespace risnet::app {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

inline constexpr int kManifestVersion = 1;
inline constexpr const char* kOutputRootEnv = "RISNET_OUT";

/// "<variant>_n<N>_s<seed>.ckpt"
std::string checkpoint_name(predict::Variant variant, std::size_t elements, std::uint64_t seed);

/// Parses the command line, runs the subcommand and maps failures to exit
/// codes: kExitConfig for usage and configuration errors, kExitRuntime for
/// everything else. Diagnostics go to stderr.
int run(const std::vector<std::string>& args);
int run(int argc, const char* const* argv);

}  // namespace risnet::app
