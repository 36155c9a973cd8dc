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
#include <string_view>

namespace bfpip {

// Logic-free substitution. A placeholder is `{name}` where name matches
// [a-z0-9_]+; anything else (including JSON braces like {"intention": ...})
// passes through untouched. A placeholder with no binding throws
// Error{kTemplateVariableUnbound}.
std::string render_template(std::string_view text,
                            const std::map<std::string, std::string>& vars);

/// True if `text` contains the placeholder `{name}`.
bool template_references(std::string_view text, std::string_view name);

}  // namespace bfpip
