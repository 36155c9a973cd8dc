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
#include <vector>

#include "bfpip/backend.hpp"
#include "bfpip/clipper.hpp"
#include "bfpip/protocol.hpp"

namespace bfpip {

/// Everything a run needs, loaded from one JSON config file. Relative paths
/// resolve against the config file's directory. Unknown keys are errors.
struct HarnessConfig {
  // dataset
  std::filesystem::path manifest_path;
  std::filesystem::path frames_root;
  std::filesystem::path videos_root;
  std::string video_ext = ".mp4";

  // media tool
  std::string decode_cmd;
  std::string encode_cmd;
  ClipContainer container = ClipContainer::kFrameSequenceZip;
  OverlayStyle overlay;

  PredictorSpec backend;
  ProtocolConfig protocol;

  std::filesystem::path stage1_template;
  std::filesystem::path stage2_template;
  std::filesystem::path cache_dir;
  std::filesystem::path runs_dir;
  std::filesystem::path clips_dir;

  int max_concurrency = 4;
  std::vector<ModalityConfig> configs;  // ablation selection; all eight when empty
  bool allow_protocol_deviations = false;

  /// Non-default protocol settings (repeats, temperature, seed), stamped
  /// into run manifests and report headers.
  std::vector<std::string> deviations;

  std::filesystem::path base_dir;
};

/// Parses the config file, applies `key.path=value` overrides last, fills
/// defaults, and validates. Throws Error{kUnknownKey}, Error{kInvalidValue},
/// Error{kMissingFile}.
HarnessConfig load_config(const std::filesystem::path& path,
                          const std::vector<std::string>& overrides = {});

HarnessConfig load_config_text(const std::string& json_text,
                               const std::filesystem::path& base_dir,
                               const std::vector<std::string>& overrides = {});

/// Stable digest over the effective configuration (credentials excluded);
/// the default run id derives from it.
std::string config_digest(const HarnessConfig& config);

}  // namespace bfpip
