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

#include "bfpip/clipper.hpp"

#include <unistd.h>

#include <atomic>
#include <cmath>

#include <fmt/format.h>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "bfpip/digest.hpp"
#include "bfpip/error.hpp"
#include "bfpip/media_tool.hpp"
#include "bfpip/zip_writer.hpp"

namespace bfpip {

namespace fs = std::filesystem;

ObservationWindow compute_window(int event_frame, int tte, int length) {
  if (event_frame < tte + length - 1) {
    throw Error(ErrorKind::kInsufficientHistory,
                fmt::format("event_frame {} needs at least {} prior frames", event_frame,
                            tte + length - 1));
  }
  ObservationWindow window;
  window.tte_frames = tte;
  window.length = length;
  window.end_frame = event_frame - tte;
  window.start_frame = window.end_frame - length + 1;
  return window;
}

namespace {

FrameSet frames_from_directory(const fs::path& dir, const ObservationWindow& window) {
  FrameSet set;
  set.mode = FrameSetMode::kRaw;
  for (int i = window.start_frame; i <= window.end_frame; ++i) {
    const fs::path file = dir / frame_file_name(i);
    if (!fs::exists(file)) {
      throw Error(ErrorKind::kMissingFrame, fmt::format("{} ({})", i, file.string()));
    }
    set.frames.emplace_back(i, file);
  }
  return set;
}

FrameSet frames_from_video(const FrameSource& source, const ObservationWindow& window) {
  auto staging = std::make_shared<TempDir>("bfpip-decode");
  const std::string output_pattern = (staging->path() / "%05d.png").string();
  const std::string cmd = instantiate_command(
      source.decode_cmd,
      {{"input", source.video_file.string()},
       {"start_frame", std::to_string(window.start_frame)},
       {"count", std::to_string(window.length)},
       {"fps", std::to_string(source.fps)},
       {"output", output_pattern}});
  const CommandResult run = run_command(cmd);
  if (run.exit_code != 0) {
    throw Error(ErrorKind::kDecoderFailure,
                fmt::format("decoder exited {}: {}", run.exit_code, run.output));
  }
  FrameSet set;
  set.mode = FrameSetMode::kRaw;
  set.staging = staging;
  for (int i = window.start_frame; i <= window.end_frame; ++i) {
    const fs::path file = staging->path() / frame_file_name(i);
    if (!fs::exists(file)) {
      throw Error(ErrorKind::kMissingFrame,
                  fmt::format("{} (decoder produced no {})", i, file.string()));
    }
    set.frames.emplace_back(i, file);
  }
  return set;
}

}  // namespace

FrameSet extract_frames(const FrameSource& source, const ObservationWindow& window) {
  if (!source.frame_dir.empty()) {
    if (!fs::is_directory(source.frame_dir)) {
      throw Error(ErrorKind::kFileNotFound,
                  "frame directory not found: " + source.frame_dir.string());
    }
    return frames_from_directory(source.frame_dir, window);
  }
  if (source.video_file.empty() || source.decode_cmd.empty()) {
    throw Error(ErrorKind::kInvalidValue,
                "frame source needs either a frame directory or a video file plus decode_cmd");
  }
  if (!fs::exists(source.video_file)) {
    throw Error(ErrorKind::kFileNotFound, "video not found: " + source.video_file.string());
  }
  return frames_from_video(source, window);
}

FrameSet render_overlay(const FrameSet& frame_set,
                        const std::vector<std::optional<BoundingBox>>& boxes,
                        const OverlayStyle& style) {
  if (frame_set.mode != FrameSetMode::kRaw) {
    throw Error(ErrorKind::kInvalidValue, "render_overlay expects a raw frame set");
  }
  if (boxes.size() != frame_set.frames.size()) {
    throw Error(ErrorKind::kLengthMismatch,
                fmt::format("{} boxes for {} frames", boxes.size(), frame_set.frames.size()));
  }

  FrameSet out;
  out.mode = FrameSetMode::kAnnotated;
  out.staging = std::make_shared<TempDir>("bfpip-overlay");

  for (size_t k = 0; k < frame_set.frames.size(); ++k) {
    const auto& [index, src] = frame_set.frames[k];
    const fs::path dst = out.staging->path() / frame_file_name(index);
    if (!boxes[k]) {
      fs::copy_file(src, dst);  // byte-identical passthrough
      out.frames.emplace_back(index, dst);
      continue;
    }
    cv::Mat image = cv::imread(src.string(), cv::IMREAD_COLOR);
    if (image.empty()) {
      throw Error(ErrorKind::kMissingFrame, fmt::format("{} (unreadable {})", index, src.string()));
    }
    const BoundingBox& b = *boxes[k];
    const int x = static_cast<int>(std::lround(b.x));
    const int y = static_cast<int>(std::lround(b.y));
    const int w = static_cast<int>(std::lround(b.w));
    const int h = static_cast<int>(std::lround(b.h));
    if (x < 0 || y < 0 || w <= 0 || h <= 0 || x + w > image.cols || y + h > image.rows) {
      throw Error(ErrorKind::kBoxOutOfBounds,
                  fmt::format("frame {}: box ({}, {}, {}, {}) on {}x{} raster", index, x, y, w,
                              h, image.cols, image.rows));
    }
    // Stroke band extends inward from the box edges, so the overlay never
    // touches pixels outside the annotated region.
    const cv::Vec3b color(style.color_bgr[0], style.color_bgr[1], style.color_bgr[2]);
    const int s = style.stroke;
    for (int row = y; row < y + h; ++row) {
      for (int col = x; col < x + w; ++col) {
        const bool on_band = (row - y < s) || (y + h - 1 - row < s) ||
                             (col - x < s) || (x + w - 1 - col < s);
        if (on_band) image.at<cv::Vec3b>(row, col) = color;
      }
    }
    if (!cv::imwrite(dst.string(), image)) {
      throw Error(ErrorKind::kInternal, "cannot write " + dst.string());
    }
    out.frames.emplace_back(index, dst);
  }
  return out;
}

std::string ClipBundle::mime_type() const {
  const std::string ext = media_ref.extension().string();
  if (ext == ".zip") return "application/zip";
  if (ext == ".mp4") return "video/mp4";
  if (ext == ".avi") return "video/x-msvideo";
  if (ext == ".webm") return "video/webm";
  return "application/octet-stream";
}

namespace {

ClipBundle package_as_zip(const FrameSet& frame_set, const PackagingOptions& options,
                          const fs::path& out_path) {
  ZipWriter zip;
  for (const auto& [index, file] : frame_set.frames) {
    zip.add_file(frame_file_name(index), read_file_bytes(file));
  }
  const std::vector<std::uint8_t> bytes = zip.finish();
  atomic_write_file(out_path, bytes);

  ClipBundle bundle;
  bundle.media_ref = out_path;
  bundle.mode = frame_set.mode;
  bundle.fps = options.fps;
  bundle.content_digest = sha256_hex(bytes);
  return bundle;
}

ClipBundle package_as_video(const FrameSet& frame_set, const PackagingOptions& options,
                            const fs::path& out_path) {
  if (options.encode_cmd.empty()) {
    throw Error(ErrorKind::kEncoderFailure, "no encode_cmd configured for video packaging");
  }
  const fs::path input_dir = frame_set.frames.front().second.parent_path();
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  static std::atomic<unsigned> encode_counter{0};
  const fs::path tmp =
      out_path.string() + fmt::format(".encode.{}.{}.tmp", ::getpid(), encode_counter++);
  const std::string cmd = instantiate_command(
      options.encode_cmd,
      {{"input", (input_dir / "%05d.png").string()},
       {"start_frame", std::to_string(frame_set.frames.front().first)},
       {"count", std::to_string(frame_set.frames.size())},
       {"fps", std::to_string(options.fps)},
       {"output", tmp.string()}});
  const CommandResult run = run_command(cmd);
  if (run.exit_code != 0 || !fs::exists(tmp)) {
    std::error_code ec;
    fs::remove(tmp, ec);
    throw Error(ErrorKind::kEncoderFailure,
                fmt::format("encoder exited {}: {}", run.exit_code, run.output));
  }
  std::error_code ec;
  fs::rename(tmp, out_path, ec);
  if (ec) {
    throw Error(ErrorKind::kEncoderFailure, "cannot publish clip: " + ec.message());
  }

  ClipBundle bundle;
  bundle.media_ref = out_path;
  bundle.mode = frame_set.mode;
  bundle.fps = options.fps;
  bundle.content_digest = sha256_file(out_path);
  return bundle;
}

}  // namespace

ClipBundle package_clip(const FrameSet& frame_set, const PackagingOptions& options,
                        const fs::path& out_path) {
  if (frame_set.frames.empty()) {
    throw Error(ErrorKind::kInvalidValue, "cannot package an empty frame set");
  }
  switch (options.container) {
    case ClipContainer::kFrameSequenceZip:
      return package_as_zip(frame_set, options, out_path);
    case ClipContainer::kVideo:
      return package_as_video(frame_set, options, out_path);
  }
  throw Error(ErrorKind::kUnsupportedFormat, "unknown clip container");
}

}  // namespace bfpip
