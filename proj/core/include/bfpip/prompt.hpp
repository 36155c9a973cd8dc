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
#include <filesystem>
#include <string>
#include <vector>

#include "bfpip/clipper.hpp"
#include "bfpip/dataset.hpp"

namespace bfpip {

/// One of the eight input-modality configurations: video mode (unannotated
/// or annotated) crossed with the bounding-box-coordinates and ego-speed
/// metadata toggles.
struct ModalityConfig {
  bool annotated_video = false;
  bool include_bb = false;
  bool include_speed = false;

  /// Row label, e.g. "UV+BB+S" or "AV".
  std::string label() const;
  static std::optional<ModalityConfig> from_label(std::string_view label);

  /// All eight configurations in fixed ablation-table order:
  /// UV, UV+S, UV+BB, UV+BB+S, AV, AV+S, AV+BB, AV+BB+S.
  static const std::array<ModalityConfig, 8>& all();

  bool operator==(const ModalityConfig&) const = default;
};

struct TemplateSet {
  std::string stage1;
  std::string stage2;
  std::string stage1_digest;
  std::string stage2_digest;

  static TemplateSet load(const std::filesystem::path& stage1_path,
                          const std::filesystem::path& stage2_path);
  static TemplateSet from_strings(std::string stage1, std::string stage2);
};

/// Per-frame metadata lines for the window, one line per frame:
///   frame <i>: bbox x=<x> y=<y> w=<w> h=<h> ego-speed: <tag>
/// with the bbox segment present iff include_bb and the ego-speed segment
/// iff include_speed. Empty string when both toggles are off. Throws
/// Error{kMissingAnnotation} when a required field is absent.
std::string serialize_metadata(const PedestrianInstance& instance,
                               const ObservationWindow& window, const ModalityConfig& config);

/// Fully rendered two-stage prompt for one (instance, configuration) pair.
/// Wire order is stage1, metadata block, media, stage2; a template that
/// consumes {metadata_block} inlines the block instead.
struct PromptPackage {
  std::string stage1_text;
  std::string stage2_text;
  std::string metadata_block;
  bool metadata_inlined = false;
  ClipBundle media;
  std::string prompt_digest;

  // Provenance carried for record keeping and replay keying.
  std::string instance_id;
  ModalityConfig config;

  /// Text parts sent before the media part.
  std::vector<std::string> parts_before_media() const;
  /// Text parts sent after the media part.
  std::vector<std::string> parts_after_media() const;
};

PromptPackage build_prompt(const PedestrianInstance& instance, const ModalityConfig& config,
                           const TemplateSet& templates, const ClipBundle& clip);

}  // namespace bfpip
