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

#include <filesystem>
#include <string>

#include "bfpip/clipper.hpp"
#include "bfpip/dataset.hpp"

namespace bfpip {

// Builds clips on demand and reuses them across modality configurations:
// one clip per (instance, video mode), published by atomic rename so
// concurrent workers racing on the same instance converge on identical
// bytes.
class ClipStore {
 public:
  struct Sources {
    std::filesystem::path frames_root;  // <root>/<video_id>/frames/%05d.png
    std::filesystem::path videos_root;  // <root>/<video_id><video_ext>
    std::string video_ext = ".mp4";
    std::string decode_cmd;
    int fps = kDatasetFps;
  };

  ClipStore(std::filesystem::path clips_dir, Sources sources, PackagingOptions packaging,
            OverlayStyle overlay = {});

  /// Returns the clip for this instance, building it if absent. `annotated`
  /// selects the AV variant (box overlays rendered into the frames).
  ClipBundle get_or_build(const PedestrianInstance& instance, const ObservationWindow& window,
                          bool annotated);

  std::filesystem::path clip_path(const std::string& instance_id, bool annotated) const;

 private:
  FrameSource resolve_source(const std::string& video_id) const;

  std::filesystem::path clips_dir_;
  Sources sources_;
  PackagingOptions packaging_;
  OverlayStyle overlay_;
};

}  // namespace bfpip
