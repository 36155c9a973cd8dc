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

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bfpip/metrics.hpp"
#include "bfpip/protocol.hpp"

namespace bfpip {

/// Static transcription of a published JAAD-beh benchmark row. These are
/// reference data only; the harness never recomputes baseline models.
struct ReferenceRow {
  std::string model;
  int year = 0;
  std::string variant;
  bool in_image = false;
  bool in_bbox = false;
  bool in_pose = false;
  bool in_speed = false;
  bool in_video = false;
  std::string extra;
  std::optional<double> acc, auc, f1, precision, recall;
};

/// The published comparison table, BF-PIP row last.
const std::vector<ReferenceRow>& reference_rows();

/// Checksum over a canonical serialization of reference_rows(); guards the
/// transcription against accidental edits.
std::string reference_rows_checksum();

struct RowResult {
  ModalityConfig config;
  EvalMetrics metrics;
  long failed_instances = 0;          // records excluded from metrics
  std::vector<EvalMetrics> per_repeat;  // treating repeat i alone as the prediction
};

struct AblationResult {
  std::vector<RowResult> rows;  // fixed ablation-table order
  std::string run_id;
  std::vector<std::string> summary_lines;  // backend/protocol/dataset description
};

/// Row metrics from one configuration's records: classification metrics over
/// evaluated records, vote-fraction AUC, stability over all records, and the
/// per-repeat breakdown.
RowResult summarize_records(const ModalityConfig& config,
                            std::span<const PredictionRecord> records);

struct AblationOptions {
  std::vector<ModalityConfig> configs;  // defaults to all eight
  int max_concurrency = 4;
  std::function<void(const PredictionRecord&)> record_sink;
};

/// Runs every test instance under each configuration (the full eight-row
/// sweep by default). Clips are built once per video mode via the clip store
/// and reused across the metadata variants.
AblationResult run_ablation(const RunContext& ctx,
                            std::span<const PedestrianInstance> instances,
                            const AblationOptions& options = {});

enum class ReportFormat { kMarkdown, kCsv, kJson };

std::optional<ReportFormat> report_format_from_string(std::string_view s);
std::string_view report_extension(ReportFormat format);

/// Renders the ablation rows plus a comparison against the reference table.
/// Markdown displays half-up 2-decimal values; csv/json carry full
/// precision. Pure function: identical inputs yield identical bytes.
std::string emit_report(const AblationResult& result,
                        const std::vector<ReferenceRow>& reference, ReportFormat format);

}  // namespace bfpip
