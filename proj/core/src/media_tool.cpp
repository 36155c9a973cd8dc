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

#include "bfpip/media_tool.hpp"

#include <sys/wait.h>

#include <array>
#include <cstdio>

#include "bfpip/error.hpp"
#include "bfpip/text_template.hpp"

namespace bfpip {

std::string instantiate_command(const std::string& command_template,
                                const std::map<std::string, std::string>& vars) {
  return render_template(command_template, vars);
}

CommandResult run_command(const std::string& command_line) {
  // Capture stderr together with stdout; the combined stream is the
  // diagnostic surfaced on failure.
  const std::string wrapped = "{ " + command_line + " ; } 2>&1";
  FILE* pipe = ::popen(wrapped.c_str(), "r");
  if (pipe == nullptr) {
    throw Error(ErrorKind::kInternal, "popen failed for: " + command_line);
  }
  CommandResult result;
  std::array<char, 4096> buf;
  size_t got = 0;
  while ((got = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) {
    result.output.append(buf.data(), got);
  }
  const int status = ::pclose(pipe);
  if (status == -1) {
    result.exit_code = -1;
  } else if (WIFEXITED(status)) {
    result.exit_code = WEXITSTATUS(status);
  } else if (WIFSIGNALED(status)) {
    result.exit_code = 128 + WTERMSIG(status);
  } else {
    result.exit_code = status;
  }
  return result;
}

}  // namespace bfpip
