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

#include "bfpip/zip_writer.hpp"

#include <zlib.h>

#include <limits>

#include "bfpip/error.hpp"

namespace bfpip {

namespace {

// DOS date 1980-01-01, time 00:00:00.
constexpr std::uint16_t kDosTime = 0;
constexpr std::uint16_t kDosDate = (0 << 9) | (1 << 5) | 1;

void put16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    v >>= 8;
  }
}

}  // namespace

void ZipWriter::add_file(const std::string& name, std::span<const std::uint8_t> bytes) {
  if (bytes.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorKind::kEncoderFailure, "zip entry too large: " + name);
  }
  Entry e;
  e.name = name;
  e.size = static_cast<std::uint32_t>(bytes.size());
  e.crc = static_cast<std::uint32_t>(
      ::crc32(0L, bytes.data(), static_cast<uInt>(bytes.size())));
  e.offset = static_cast<std::uint32_t>(buffer_.size());

  put32(buffer_, 0x04034b50);           // local file header
  put16(buffer_, 20);                   // version needed
  put16(buffer_, 0);                    // flags
  put16(buffer_, 0);                    // method: store
  put16(buffer_, kDosTime);
  put16(buffer_, kDosDate);
  put32(buffer_, e.crc);
  put32(buffer_, e.size);               // compressed
  put32(buffer_, e.size);               // uncompressed
  put16(buffer_, static_cast<std::uint16_t>(name.size()));
  put16(buffer_, 0);                    // extra length
  buffer_.insert(buffer_.end(), name.begin(), name.end());
  buffer_.insert(buffer_.end(), bytes.begin(), bytes.end());

  entries_.push_back(std::move(e));
}

std::vector<std::uint8_t> ZipWriter::finish() {
  const std::uint32_t cd_offset = static_cast<std::uint32_t>(buffer_.size());
  for (const Entry& e : entries_) {
    put32(buffer_, 0x02014b50);         // central directory header
    put16(buffer_, 20);                 // version made by
    put16(buffer_, 20);                 // version needed
    put16(buffer_, 0);                  // flags
    put16(buffer_, 0);                  // method
    put16(buffer_, kDosTime);
    put16(buffer_, kDosDate);
    put32(buffer_, e.crc);
    put32(buffer_, e.size);
    put32(buffer_, e.size);
    put16(buffer_, static_cast<std::uint16_t>(e.name.size()));
    put16(buffer_, 0);                  // extra length
    put16(buffer_, 0);                  // comment length
    put16(buffer_, 0);                  // disk number
    put16(buffer_, 0);                  // internal attrs
    put32(buffer_, 0);                  // external attrs
    put32(buffer_, e.offset);
    buffer_.insert(buffer_.end(), e.name.begin(), e.name.end());
  }
  const std::uint32_t cd_size = static_cast<std::uint32_t>(buffer_.size()) - cd_offset;

  put32(buffer_, 0x06054b50);           // end of central directory
  put16(buffer_, 0);
  put16(buffer_, 0);
  put16(buffer_, static_cast<std::uint16_t>(entries_.size()));
  put16(buffer_, static_cast<std::uint16_t>(entries_.size()));
  put32(buffer_, cd_size);
  put32(buffer_, cd_offset);
  put16(buffer_, 0);                    // comment length

  return std::move(buffer_);
}

}  // namespace bfpip
