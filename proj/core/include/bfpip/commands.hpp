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
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bfpip/config.hpp"
#include "bfpip/report.hpp"

namespace bfpip {

// Command layer behind the CLI. Every function throws bfpip::Error on
// failure; the binary turns that into a nonzero exit with a machine-readable
// summary. `out` receives human-readable progress lines.

struct RunArtifacts {
  std::filesystem::path run_dir;
  AblationResult result;
};

/// JAAD annotations + split spec -> validated canonical manifest at `out_path`.
void cmd_ingest(const std::filesystem::path& annotation_dir,
                const std::filesystem::path& splits_file,
                const std::filesystem::path& out_path, std::ostream& out);

/// Pre-builds clips for a split in one video mode.
void cmd_prepare(const HarnessConfig& config, Split split, bool annotated, std::ostream& out);

/// Single-configuration evaluation of the test split.
RunArtifacts cmd_run(const HarnessConfig& config, const ModalityConfig& modality,
                     const std::optional<std::string>& run_id, std::ostream& out);

/// Full modality sweep (config.configs, or all eight).
RunArtifacts cmd_ablate(const HarnessConfig& config, const std::optional<std::string>& run_id,
                        std::ostream& out);

/// Re-emits one report format from the records stored in a run directory;
/// reporting is pure, so re-runs are byte-identical.
std::string cmd_report(const std::filesystem::path& run_dir, ReportFormat format,
                       std::ostream& out);

void cmd_cache_stats(const HarnessConfig& config, std::ostream& out);
void cmd_cache_purge(const HarnessConfig& config, std::ostream& out);

/// Shared run pipeline: evaluate `configs` over the test split, write
/// records.jsonl, manifest.json, and all three report files under
/// runs/<run_id>/.
RunArtifacts execute_run(const HarnessConfig& config,
                         const std::vector<ModalityConfig>& configs,
                         const std::optional<std::string>& run_id_override, std::ostream& out);

}  // namespace bfpip
