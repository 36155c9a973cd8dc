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

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bfpip/dataset.hpp"
#include "bfpip/fs.hpp"

namespace bfpip {

/// The 16-frame interval [start_frame, end_frame] ending tte_frames before
/// the event; end_frame is t0, the last observed frame.
struct ObservationWindow {
  int start_frame = 0;
  int end_frame = 0;   // inclusive
  int tte_frames = kTteFrames;
  int length = kWindowFrames;

  bool operator==(const ObservationWindow&) const = default;
};

/// Throws Error{kInsufficientHistory} when event_frame < tte + length - 1.
ObservationWindow compute_window(int event_frame, int tte = kTteFrames,
                                 int length = kWindowFrames);

enum class FrameSetMode { kRaw, kAnnotated };

/// The materialized window frames, staged as numbered image files. The
/// staging directory (when owned) lives as long as any copy of the set.
struct FrameSet {
  std::vector<std::pair<int, std::filesystem::path>> frames;
  FrameSetMode mode = FrameSetMode::kRaw;
  std::shared_ptr<TempDir> staging;
};

/// Where the window frames come from: a pre-extracted frame directory
/// (`<video_id>/frames/%05d.png`) or a container video handed to the
/// external media tool via `decode_cmd`.
struct FrameSource {
  std::filesystem::path frame_dir;
  std::filesystem::path video_file;
  std::string decode_cmd;  // template with {input} {start_frame} {count} {fps} {output}
  int fps = kDatasetFps;
};

FrameSet extract_frames(const FrameSource& source, const ObservationWindow& window);

struct OverlayStyle {
  int stroke = 3;
  std::array<std::uint8_t, 3> color_bgr{0, 0, 255};  // red
};

/// Draws the box outline (stroke extends inward from the box edges) on each
/// frame that has one; frames without a box are copied byte-identically.
/// `boxes` is indexed like `frame_set.frames`. Throws
/// Error{kBoxOutOfBounds} when a box does not fit its raster.
FrameSet render_overlay(const FrameSet& frame_set,
                        const std::vector<std::optional<BoundingBox>>& boxes,
                        const OverlayStyle& style = {});

enum class ClipContainer { kFrameSequenceZip, kVideo };

struct PackagingOptions {
  ClipContainer container = ClipContainer::kFrameSequenceZip;
  std::string encode_cmd;  // required for kVideo
  int fps = kDatasetFps;
};

struct ClipBundle {
  std::filesystem::path media_ref;
  FrameSetMode mode = FrameSetMode::kRaw;
  int fps = kDatasetFps;
  std::string content_digest;  // sha256 of the media bytes

  std::string mime_type() const;
};

/// Encodes the frame set into a single media file at `out_path` and returns
/// the bundle. Frame-sequence mode writes a deterministic stored zip; video
/// mode delegates to `encode_cmd`. Throws Error{kEncoderFailure}.
ClipBundle package_clip(const FrameSet& frame_set, const PackagingOptions& options,
                        const std::filesystem::path& out_path);

}  // namespace bfpip
