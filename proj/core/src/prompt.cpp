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

#include "bfpip/prompt.hpp"

#include <cmath>

#include <fmt/format.h>

#include "bfpip/digest.hpp"
#include "bfpip/error.hpp"
#include "bfpip/text_template.hpp"

namespace bfpip {

namespace {

// Pixel values print without a trailing ".0" when integral, shortest
// round-trip otherwise, independent of the formatting library's defaults.
std::string format_pixels(double v) {
  if (v == std::floor(v) && std::abs(v) < 9e15) {
    return fmt::format("{}", static_cast<long long>(v));
  }
  return fmt::format("{}", v);
}

constexpr std::string_view kCrossLiteral = R"({"intention": "cross"})";
constexpr std::string_view kNotCrossLiteral = R"({"intention": "not_cross"})";

}  // namespace

std::string ModalityConfig::label() const {
  std::string out = annotated_video ? "AV" : "UV";
  if (include_bb) out += "+BB";
  if (include_speed) out += "+S";
  return out;
}

std::optional<ModalityConfig> ModalityConfig::from_label(std::string_view label) {
  for (const ModalityConfig& config : all()) {
    if (config.label() == label) return config;
  }
  return std::nullopt;
}

const std::array<ModalityConfig, 8>& ModalityConfig::all() {
  static const std::array<ModalityConfig, 8> kAll = {{
      {false, false, false},  // UV
      {false, false, true},   // UV+S
      {false, true, false},   // UV+BB
      {false, true, true},    // UV+BB+S
      {true, false, false},   // AV
      {true, false, true},    // AV+S
      {true, true, false},    // AV+BB
      {true, true, true},     // AV+BB+S
  }};
  return kAll;
}

TemplateSet TemplateSet::load(const std::filesystem::path& stage1_path,
                              const std::filesystem::path& stage2_path) {
  for (const auto& p : {stage1_path, stage2_path}) {
    if (!std::filesystem::exists(p)) {
      throw Error(ErrorKind::kMissingFile, "template not found: " + p.string());
    }
  }
  return from_strings(read_file(stage1_path), read_file(stage2_path));
}

TemplateSet TemplateSet::from_strings(std::string stage1, std::string stage2) {
  TemplateSet set;
  set.stage1 = std::move(stage1);
  set.stage2 = std::move(stage2);
  set.stage1_digest = sha256_hex(set.stage1);
  set.stage2_digest = sha256_hex(set.stage2);
  return set;
}

std::string serialize_metadata(const PedestrianInstance& instance,
                               const ObservationWindow& window, const ModalityConfig& config) {
  if (!config.include_bb && !config.include_speed) return "";

  std::string out;
  for (int i = window.start_frame; i <= window.end_frame; ++i) {
    const FrameAnnotation* fa = instance.frame(i);
    if (fa == nullptr) {
      throw Error(ErrorKind::kMissingAnnotation, fmt::format("{}", i));
    }
    std::string line = fmt::format("frame {}:", i);
    if (config.include_bb) {
      if (!fa->bbox) {
        throw Error(ErrorKind::kMissingAnnotation, fmt::format("{} (no bbox)", i));
      }
      line += fmt::format(" bbox x={} y={} w={} h={}", format_pixels(fa->bbox->x),
                          format_pixels(fa->bbox->y), format_pixels(fa->bbox->w),
                          format_pixels(fa->bbox->h));
    }
    if (config.include_speed) {
      if (!fa->ego_speed) {
        throw Error(ErrorKind::kMissingAnnotation, fmt::format("{} (no ego_speed)", i));
      }
      line += fmt::format(" ego-speed: {}", to_string(*fa->ego_speed));
    }
    if (!out.empty()) out += "\n";
    out += line;
  }
  return out;
}

namespace {

std::string modality_inventory(const ModalityConfig& config) {
  std::string out = config.annotated_video
                        ? "- a short video clip in which the target pedestrian is marked in "
                          "every frame by a red bounding-box overlay"
                        : "- a short raw video clip (no overlays); identify the most "
                          "safety-relevant pedestrian near the roadway";
  if (config.include_bb) {
    out += "\n- per-frame bounding-box coordinates of the target pedestrian, given "
           "below as pixel values (x, y = top-left corner; w, h = size)";
  }
  if (config.include_speed) {
    out += "\n- the ego vehicle's per-frame speed state (ego-speed), given below";
  }
  return out;
}

std::string format_seconds(int frames, int fps) {
  const double seconds = static_cast<double>(frames) / fps;
  if (seconds == std::floor(seconds)) {
    return fmt::format("{}", static_cast<long long>(seconds));
  }
  return fmt::format("{:.2f}", seconds);
}

}  // namespace

std::vector<std::string> PromptPackage::parts_before_media() const {
  std::vector<std::string> parts{stage1_text};
  if (!metadata_block.empty() && !metadata_inlined) parts.push_back(metadata_block);
  return parts;
}

std::vector<std::string> PromptPackage::parts_after_media() const {
  return {stage2_text};
}

PromptPackage build_prompt(const PedestrianInstance& instance, const ModalityConfig& config,
                           const TemplateSet& templates, const ClipBundle& clip) {
  const bool clip_annotated = clip.mode == FrameSetMode::kAnnotated;
  if (clip_annotated != config.annotated_video) {
    throw Error(ErrorKind::kInvalidValue,
                fmt::format("clip mode ({}) does not match config {}",
                            clip_annotated ? "annotated" : "raw", config.label()));
  }

  const ObservationWindow window = compute_window(instance.event_frame);
  const std::string metadata = serialize_metadata(instance, window, config);

  const std::map<std::string, std::string> vars = {
      {"n_frames", std::to_string(window.length)},
      {"fps", std::to_string(kDatasetFps)},
      {"tte_seconds", format_seconds(window.tte_frames, kDatasetFps)},
      {"modality_inventory", modality_inventory(config)},
      {"metadata_block", metadata},
      {"labels", fmt::format("{} or {}", kCrossLiteral, kNotCrossLiteral)},
  };

  PromptPackage package;
  package.metadata_inlined = template_references(templates.stage1, "metadata_block") ||
                             template_references(templates.stage2, "metadata_block");
  package.stage1_text = render_template(templates.stage1, vars);
  package.stage2_text = render_template(templates.stage2, vars);
  if (package.stage1_text.empty() || package.stage2_text.empty()) {
    throw Error(ErrorKind::kInvalidValue, "stage templates must render non-empty text");
  }
  package.metadata_block = metadata;
  package.media = clip;
  package.instance_id = instance.instance_id;
  package.config = config;
  package.prompt_digest = sha256_fields(
      {package.stage1_text, package.stage2_text, package.metadata_block, clip.content_digest});
  return package;
}

}  // namespace bfpip
