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
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bfpip/label.hpp"

namespace bfpip {

inline constexpr int kDatasetFps = 30;
inline constexpr int kTteFrames = 30;    // prediction horizon, 1 s at 30 FPS
inline constexpr int kWindowFrames = 16; // observation window length
inline constexpr int kMinEventFrame = kTteFrames + kWindowFrames - 1;

struct BoundingBox {
  double x = 0;  // left edge, pixels
  double y = 0;  // top edge, pixels
  double w = 0;
  double h = 0;

  double center_x() const { return x + w / 2.0; }
  bool operator==(const BoundingBox&) const = default;
};

enum class EgoSpeed {
  kStopped,
  kDecelerating,
  kConstant,
  kAccelerating,
  kMovingSlow,
  kMovingFast,
};

std::string_view to_string(EgoSpeed tag);
std::optional<EgoSpeed> ego_speed_from_string(std::string_view s);

enum class Split { kTrain, kVal, kTest };

std::string_view to_string(Split split);
std::optional<Split> split_from_string(std::string_view s);

struct FrameAnnotation {
  int frame_index = 0;  // 0-based
  std::optional<BoundingBox> bbox;
  std::optional<EgoSpeed> ego_speed;

  bool operator==(const FrameAnnotation&) const = default;
};

/// One evaluation unit: a tracked pedestrian with per-frame annotations, the
/// event frame the prediction targets, and the crossing ground truth.
struct PedestrianInstance {
  std::string instance_id;
  std::string video_id;
  std::vector<FrameAnnotation> frames;  // sorted by frame_index, unique
  int event_frame = 0;
  std::optional<Label> ground_truth;    // required for test-split instances
  Split split = Split::kTest;
  std::optional<std::pair<int, int>> frame_dims;  // (width, height), pixels

  /// Annotation for a specific frame index, if present.
  const FrameAnnotation* frame(int frame_index) const;

  bool operator==(const PedestrianInstance&) const = default;
};

struct DatasetManifest {
  std::vector<PedestrianInstance> instances;
  int fps = kDatasetFps;
  std::string source;

  bool operator==(const DatasetManifest&) const = default;
};

/// Parses and validates the canonical JSON manifest. Rejects with
/// Error{kSchemaViolation} carrying one detail line per violated invariant,
/// or Error{kDuplicateInstanceId} / Error{kFileNotFound}.
DatasetManifest parse_manifest(const std::filesystem::path& path);

DatasetManifest parse_manifest_text(const std::string& json_text);

std::string serialize_manifest(const DatasetManifest& manifest);
void emit_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

/// Instances of the given split, ordered by instance_id.
std::vector<PedestrianInstance> filter_split(const DatasetManifest& manifest, Split split);

}  // namespace bfpip
