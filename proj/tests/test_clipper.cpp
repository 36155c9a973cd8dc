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

#include <doctest.h>

#include <fmt/format.h>
#include <opencv2/imgcodecs.hpp>

#include "bfpip/clipper.hpp"
#include "bfpip/error.hpp"
#include "bfpip/fs.hpp"
#include "support/test_support.hpp"

using namespace bfpip;
namespace fs = std::filesystem;

namespace {

void write_uniform_frames(const fs::path& dir, int first, int last, int width, int height,
                          cv::Scalar color = cv::Scalar(128, 128, 128)) {
  fs::create_directories(dir);
  cv::Mat image(height, width, CV_8UC3, color);
  for (int f = first; f <= last; ++f) {
    cv::imwrite((dir / frame_file_name(f)).string(), image);
  }
}

}  // namespace

TEST_CASE("compute_window definition") {
  const ObservationWindow w = compute_window(120);
  CHECK(w.start_frame == 75);
  CHECK(w.end_frame == 90);
  CHECK(w.tte_frames == 30);
  CHECK(w.length == 16);

  const ObservationWindow boundary = compute_window(45);
  CHECK(boundary.start_frame == 0);
  CHECK(boundary.end_frame == 15);

  CHECK_THROWS_AS(compute_window(44), Error);
  try {
    compute_window(44);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kInsufficientHistory);
  }
}

TEST_CASE("extract_frames from a frame directory") {
  TempDir dir("clip");
  const fs::path frames = dir.path() / "frames";
  write_uniform_frames(frames, 0, 99, 32, 24);

  FrameSource source;
  source.frame_dir = frames;
  const FrameSet set = extract_frames(source, compute_window(120));
  REQUIRE(set.frames.size() == 16);
  CHECK(set.frames.front().first == 75);
  CHECK(set.frames.back().first == 90);
  CHECK(set.mode == FrameSetMode::kRaw);
}

TEST_CASE("missing frame is reported with its index") {
  TempDir dir("clip");
  const fs::path frames = dir.path() / "frames";
  write_uniform_frames(frames, 0, 99, 32, 24);
  fs::remove(frames / frame_file_name(80));

  FrameSource source;
  source.frame_dir = frames;
  try {
    extract_frames(source, compute_window(120));
    FAIL("expected MissingFrame");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kMissingFrame);
    CHECK(e.message().find("80") != std::string::npos);
  }
}

TEST_CASE("decoder subprocess contract") {
  TempDir dir("clip");
  const fs::path video = dir.path() / "input.mp4";
  atomic_write_file(video, std::string("not really a video"));
  const fs::path prepared = dir.path() / "prepared";
  write_uniform_frames(prepared, 75, 90, 32, 24);

  FrameSource source;
  source.video_file = video;

  SUBCASE("nonzero exit surfaces the captured diagnostic") {
    source.decode_cmd = "echo boom; exit 3";
    try {
      extract_frames(source, compute_window(120));
      FAIL("expected DecoderFailure");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kDecoderFailure);
      CHECK(e.message().find("boom") != std::string::npos);
    }
  }

  SUBCASE("a decoder that writes the numbered frames succeeds") {
    // Fake decoder: copy the prepared frames into the staging directory.
    source.decode_cmd =
        fmt::format("test -f {{input}} && cp {}/*.png \"$(dirname '{{output}}')\"/",
                    prepared.string());
    const FrameSet set = extract_frames(source, compute_window(120));
    CHECK(set.frames.size() == 16);
    CHECK(set.staging != nullptr);
  }

  SUBCASE("a decoder that produces nothing yields MissingFrame") {
    source.decode_cmd = "true";
    try {
      extract_frames(source, compute_window(120));
      FAIL("expected MissingFrame");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kMissingFrame);
    }
  }
}

TEST_CASE("overlay colors exactly the inward stroke band") {
  TempDir dir("overlay");
  const fs::path frames = dir.path() / "frames";
  write_uniform_frames(frames, 0, 0, 100, 100);

  FrameSet raw;
  raw.mode = FrameSetMode::kRaw;
  raw.frames = {{0, frames / frame_file_name(0)}};

  const BoundingBox box{10, 20, 30, 40};
  const FrameSet annotated = render_overlay(raw, {box}, OverlayStyle{});
  CHECK(annotated.mode == FrameSetMode::kAnnotated);

  const cv::Mat out = cv::imread(annotated.frames[0].second.string(), cv::IMREAD_COLOR);
  REQUIRE(!out.empty());
  const cv::Vec3b red(0, 0, 255);
  const cv::Vec3b gray(128, 128, 128);
  int red_pixels = 0;
  for (int row = 0; row < 100; ++row) {
    for (int col = 0; col < 100; ++col) {
      const bool inside = col >= 10 && col < 40 && row >= 20 && row < 60;
      const bool band = inside && (col < 13 || col >= 37 || row < 23 || row >= 57);
      const cv::Vec3b expected = band ? red : gray;
      if (out.at<cv::Vec3b>(row, col) != expected) {
        CAPTURE(row);
        CAPTURE(col);
        REQUIRE(out.at<cv::Vec3b>(row, col) == expected);
      }
      if (band) ++red_pixels;
    }
  }
  // Perimeter band of a 30x40 box with stroke 3: full area minus interior.
  CHECK(red_pixels == 30 * 40 - 24 * 34);

  // Source raster untouched.
  const cv::Mat src = cv::imread(raw.frames[0].second.string(), cv::IMREAD_COLOR);
  CHECK(src.at<cv::Vec3b>(21, 11) == gray);
}

TEST_CASE("frames without boxes pass through byte-identically") {
  TempDir dir("overlay");
  const fs::path frames = dir.path() / "frames";
  write_uniform_frames(frames, 0, 1, 50, 50);

  FrameSet raw;
  raw.mode = FrameSetMode::kRaw;
  raw.frames = {{0, frames / frame_file_name(0)}, {1, frames / frame_file_name(1)}};

  const FrameSet out = render_overlay(raw, {std::nullopt, BoundingBox{5, 5, 10, 10}}, {});
  CHECK(read_file(out.frames[0].second) == read_file(raw.frames[0].second));
  CHECK(read_file(out.frames[1].second) != read_file(raw.frames[1].second));
}

TEST_CASE("box outside the raster is BoxOutOfBounds") {
  TempDir dir("overlay");
  const fs::path frames = dir.path() / "frames";
  write_uniform_frames(frames, 0, 0, 100, 100);

  FrameSet raw;
  raw.mode = FrameSetMode::kRaw;
  raw.frames = {{0, frames / frame_file_name(0)}};

  try {
    render_overlay(raw, {BoundingBox{90, 90, 30, 30}}, {});
    FAIL("expected BoxOutOfBounds");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kBoxOutOfBounds);
  }
}

TEST_CASE("frame-sequence packaging is deterministic and mode-sensitive") {
  TempDir dir("pack");
  const fs::path frames = dir.path() / "frames";
  write_uniform_frames(frames, 75, 90, 32, 24);

  FrameSource source;
  source.frame_dir = frames;
  const FrameSet raw = extract_frames(source, compute_window(120));

  const ClipBundle a = package_clip(raw, {}, dir.path() / "a.zip");
  const ClipBundle b = package_clip(raw, {}, dir.path() / "b.zip");
  CHECK(a.content_digest == b.content_digest);
  CHECK(a.fps == 30);
  CHECK(a.mime_type() == "application/zip");

  std::vector<std::optional<BoundingBox>> boxes(16);
  boxes[3] = BoundingBox{2, 2, 10, 10};
  const FrameSet annotated = render_overlay(raw, boxes, {});
  const ClipBundle c = package_clip(annotated, {}, dir.path() / "c.zip");
  CHECK(c.content_digest != a.content_digest);
  CHECK(c.mode == FrameSetMode::kAnnotated);
}

TEST_CASE("video packaging delegates to the encoder template") {
  TempDir dir("pack");
  const fs::path frames = dir.path() / "frames";
  write_uniform_frames(frames, 75, 90, 32, 24);

  FrameSource source;
  source.frame_dir = frames;
  const FrameSet raw = extract_frames(source, compute_window(120));

  PackagingOptions options;
  options.container = ClipContainer::kVideo;

  SUBCASE("missing tool is an EncoderFailure naming the problem") {
    options.encode_cmd = "definitely-not-a-real-encoder {input} {output}";
    try {
      package_clip(raw, options, dir.path() / "clip.mp4");
      FAIL("expected EncoderFailure");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kEncoderFailure);
      CHECK(e.message().find("not found") != std::string::npos);
    }
  }

  SUBCASE("fake encoder produces a deterministic container") {
    // Concatenate the numbered frames; bit-stable stand-in for a video encode.
    options.encode_cmd = "cat \"$(dirname '{input}')\"/*.png > {output}";
    const ClipBundle a = package_clip(raw, options, dir.path() / "a.mp4");
    const ClipBundle b = package_clip(raw, options, dir.path() / "b.mp4");
    CHECK(a.content_digest == b.content_digest);
    CHECK(a.mime_type() == "video/mp4");
    CHECK(fs::exists(a.media_ref));
  }
}

TEST_CASE("clip store falls back to container video when no frame directory exists") {
  auto inst = test::make_instance("ped_v", "vid_v", 90, Label::kCross);
  const ObservationWindow window = compute_window(inst.event_frame);

  TempDir dir("store");
  const fs::path prepared = dir.path() / "prepared";
  test::write_frame_dir(prepared, inst, window.start_frame, window.end_frame);
  fs::create_directories(dir.path() / "videos");
  atomic_write_file(dir.path() / "videos" / "vid_v.mp4", std::string("container bytes"));

  ClipStore::Sources sources;
  sources.frames_root = dir.path() / "frames-absent";
  sources.videos_root = dir.path() / "videos";
  sources.decode_cmd =
      fmt::format("test -f {{input}} && cp {}/*.png \"$(dirname '{{output}}')\"/",
                  prepared.string());
  ClipStore store(dir.path() / "clips", sources, PackagingOptions{});

  const ClipBundle bundle = store.get_or_build(inst, window, false);
  CHECK(fs::exists(bundle.media_ref));
  CHECK(bundle.mime_type() == "application/zip");

  // Unknown video id has no source at all.
  auto orphan = test::make_instance("ped_x", "vid_x", 90, Label::kCross);
  try {
    store.get_or_build(orphan, window, false);
    FAIL("expected FileNotFound");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kFileNotFound);
  }
}

TEST_CASE("clip store reuses one clip per video mode") {
  auto inst = test::make_instance("ped0", "vid0", 90, Label::kCross);
  test::Workspace ws({inst});
  ClipStore store = ws.make_clip_store();
  const ObservationWindow window = compute_window(inst.event_frame);

  const ClipBundle uv1 = store.get_or_build(inst, window, false);
  const ClipBundle uv2 = store.get_or_build(inst, window, false);
  CHECK(uv1.content_digest == uv2.content_digest);
  CHECK(uv1.media_ref == uv2.media_ref);

  const ClipBundle av = store.get_or_build(inst, window, true);
  CHECK(av.content_digest != uv1.content_digest);
  CHECK(av.mode == FrameSetMode::kAnnotated);
}
