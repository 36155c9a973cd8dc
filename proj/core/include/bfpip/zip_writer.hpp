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
#include <span>
#include <string>
#include <vector>

namespace bfpip {

// Minimal store-only (method 0) zip container used for the frame-sequence
// clip fallback. All timestamps are pinned to the DOS epoch so identical
// inputs always produce identical bytes.
class ZipWriter {
 public:
  void add_file(const std::string& name, std::span<const std::uint8_t> bytes);

  /// Appends the central directory and returns the finished archive.
  std::vector<std::uint8_t> finish();

 private:
  struct Entry {
    std::string name;
    std::uint32_t crc = 0;
    std::uint32_t size = 0;
    std::uint32_t offset = 0;
  };

  std::vector<std::uint8_t> buffer_;
  std::vector<Entry> entries_;
};

}  // namespace bfpip
