// Copyright 2026 The SiamUDA Authors
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

// Thin entry point; all command logic lives in the library so tests can
// drive the same code paths without spawning processes.

#include <cstdio>

#include "siamuda/cli/commands.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  const siamuda::cli::CommandResult result = siamuda::cli::run_command(args);
  if (!result.summary.empty())
    std::fprintf(result.exit_code == 0 ? stdout : stderr, "%s\n", result.summary.c_str());
  return result.exit_code;
}
