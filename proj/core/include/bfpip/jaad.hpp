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
#include <map>
#include <string>
#include <vector>

#include "bfpip/dataset.hpp"

namespace bfpip {

/// Per-split video id lists, loaded from a JSON file of the form
/// {"train": [...], "val": [...], "test": [...]}.
struct SplitSpec {
  std::map<std::string, Split> video_split;

  static SplitSpec load(const std::filesystem::path& path);
};

struct JaadAdaptResult {
  DatasetManifest manifest;
  /// One line per instance dropped for insufficient history.
  std::vector<std::string> excluded;
};

// Adapter for JAAD-style per-video annotation XML:
//   <dir>/annotations/<video_id>.xml           pedestrian tracks with per-box
//                                              frame, xtl/ytl/xbr/ybr and the
//                                              "id"/"cross" attributes
//   <dir>/annotations_vehicle/<video_id>_vehicle.xml
//                                              per-frame ego-speed actions
//
// A pedestrian whose track contains a crossing annotation maps to
// ground_truth = cross with the event frame at the first crossing box;
// otherwise the event is the last annotated frame and the label not_cross.
// Instances with event_frame < 45 cannot host an observation window and are
// excluded (reported in JaadAdaptResult::excluded).
JaadAdaptResult adapt_jaad(const std::filesystem::path& annotation_dir,
                           const SplitSpec& splits);

}  // namespace bfpip
