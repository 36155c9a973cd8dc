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

#include <optional>
#include <string_view>

namespace bfpip {

/// Binary crossing-intention label. "cross" is the positive class everywhere.
enum class Label { kCross, kNotCross };

constexpr std::string_view to_string(Label label) {
  return label == Label::kCross ? "cross" : "not_cross";
}

constexpr std::optional<Label> label_from_string(std::string_view s) {
  if (s == "cross") return Label::kCross;
  if (s == "not_cross") return Label::kNotCross;
  return std::nullopt;
}

}  // namespace bfpip
