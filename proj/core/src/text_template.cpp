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

#include "bfpip/text_template.hpp"

#include <cctype>

#include "bfpip/error.hpp"

namespace bfpip {

namespace {

bool is_name_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
}

// Returns the placeholder name starting at text[pos] == '{', or empty if the
// brace does not open a well-formed placeholder.
std::string_view placeholder_at(std::string_view text, size_t pos) {
  size_t end = pos + 1;
  while (end < text.size() && is_name_char(text[end])) ++end;
  if (end == pos + 1 || end >= text.size() || text[end] != '}') return {};
  return text.substr(pos + 1, end - pos - 1);
}

}  // namespace

std::string render_template(std::string_view text,
                            const std::map<std::string, std::string>& vars) {
  std::string out;
  out.reserve(text.size());
  size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '{') {
      const std::string_view name = placeholder_at(text, i);
      if (!name.empty()) {
        auto it = vars.find(std::string(name));
        if (it == vars.end()) {
          throw Error(ErrorKind::kTemplateVariableUnbound, std::string(name));
        }
        out.append(it->second);
        i += name.size() + 2;
        continue;
      }
    }
    out.push_back(text[i]);
    ++i;
  }
  return out;
}

bool template_references(std::string_view text, std::string_view name) {
  size_t i = 0;
  while ((i = text.find('{', i)) != std::string_view::npos) {
    if (placeholder_at(text, i) == name) return true;
    ++i;
  }
  return false;
}

}  // namespace bfpip
