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

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bfpip {

/// SHA-256 of `bytes`, lowercase hex.
std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(std::string_view text);

/// SHA-256 of a file's contents. Throws Error{kFileNotFound}.
std::string sha256_file(const std::filesystem::path& path);

/// Digest of an ordered field tuple. Each field is length-prefixed before
/// hashing so that ("ab","c") and ("a","bc") cannot collide.
std::string sha256_fields(const std::vector<std::string>& fields);

std::string base64_encode(std::span<const std::uint8_t> bytes);

}  // namespace bfpip
