// Copyright 2025-present the bfpip authors. All rights reserved.
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

#include <map>
#include <string>

namespace bfpip {

struct CommandResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr, interleaved
};

// External media tool contract: a configured command template is instantiated
// with {input}, {start_frame}, {count}, {fps}, {output} and run through the
// shell. Exit code 0 means success; anything else is reported to the caller
// with the captured output as the diagnostic.
std::string instantiate_command(const std::string& command_template,
                                const std::map<std::string, std::string>& vars);

CommandResult run_command(const std::string& command_line);

}  // namespace bfpip
