/*
 * Copyright 2026 The restcn Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Subcommand driver behind the restcn executable.
//
// Exit codes: 0 success, 2 usage or configuration error, 3 runtime failure
// (including training divergence).

#ifndef RESTCN_APP_CLI_HPP_
#define RESTCN_APP_CLI_HPP_

#include <iosfwd>

namespace restcn::app {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitRuntime = 3;

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace restcn::app

#endif  // RESTCN_APP_CLI_HPP_
