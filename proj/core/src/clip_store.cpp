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

#include "bfpip/clip_store.hpp"

#include <utility>

#include "bfpip/digest.hpp"
#include "bfpip/error.hpp"

namespace bfpip {

namespace fs = std::filesystem;

ClipStore::ClipStore(fs::path clips_dir, Sources sources, PackagingOptions packaging,
                     OverlayStyle overlay)
    : clips_dir_(std::move(clips_dir)),
      sources_(std::move(sources)),
      packaging_(std::move(packaging)),
      overlay_(overlay) {}

fs::path ClipStore::clip_path(const std::string& instance_id, bool annotated) const {
  const char* ext =
      packaging_.container == ClipContainer::kFrameSequenceZip ? ".zip" : ".mp4";
  return clips_dir_ / (instance_id + (annotated ? ".av" : ".uv") + ext);
}

FrameSource ClipStore::resolve_source(const std::string& video_id) const {
  FrameSource source;
  source.fps = sources_.fps;
  if (!sources_.frames_root.empty()) {
    const fs::path dir = sources_.frames_root / video_id / "frames";
    if (fs::is_directory(dir)) {
      source.frame_dir = dir;
      return source;
    }
  }
  if (!sources_.videos_root.empty()) {
    const fs::path video = sources_.videos_root / (video_id + sources_.video_ext);
    if (fs::exists(video)) {
      source.video_file = video;
      source.decode_cmd = sources_.decode_cmd;
      return source;
    }
  }
  throw Error(ErrorKind::kFileNotFound, "no frame source for video " + video_id);
}

ClipBundle ClipStore::get_or_build(const PedestrianInstance& instance,
                                   const ObservationWindow& window, bool annotated) {
  const fs::path path = clip_path(instance.instance_id, annotated);
  if (fs::exists(path)) {
    ClipBundle bundle;
    bundle.media_ref = path;
    bundle.mode = annotated ? FrameSetMode::kAnnotated : FrameSetMode::kRaw;
    bundle.fps = packaging_.fps;
    bundle.content_digest = sha256_file(path);
    return bundle;
  }

  FrameSet frames = extract_frames(resolve_source(instance.video_id), window);
  if (annotated) {
    std::vector<std::optional<BoundingBox>> boxes;
    boxes.reserve(frames.frames.size());
    for (const auto& [index, _] : frames.frames) {
      const FrameAnnotation* fa = instance.frame(index);
      boxes.push_back(fa && fa->bbox ? fa->bbox : std::optional<BoundingBox>{});
    }
    frames = render_overlay(frames, boxes, overlay_);
  }
  return package_clip(frames, packaging_, path);
}

}  // namespace bfpip
