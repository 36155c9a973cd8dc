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

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bfpip/backend.hpp"
#include "bfpip/clip_store.hpp"
#include "bfpip/label.hpp"
#include "bfpip/prompt.hpp"

namespace bfpip {

enum class ParseMode { kStrict, kSalvage };

std::string_view to_string(ParseMode mode);
std::optional<ParseMode> parse_mode_from_string(std::string_view s);

struct ParsedLabel {
  Label value = Label::kNotCross;
  bool salvaged = false;
};

// Strict mode accepts exactly one JSON object {"intention": "<label>"},
// tolerating surrounding whitespace and a single fenced code block. Salvage
// mode falls back to a case-insensitive whole-token scan and succeeds only
// when exactly one of the two label literals occurs. Throws
// Error{kMalformedResponse} when no unique label can be extracted.
ParsedLabel parse_response(std::string_view raw, ParseMode mode);

enum class TieBreak { kNotCross, kCross };

std::string_view to_string(TieBreak tie);
std::optional<TieBreak> tie_break_from_string(std::string_view s);

struct AggregateResult {
  Label label = Label::kNotCross;
  double score = 0.0;  // fraction of cross votes
  bool unanimous = false;
};

/// Majority vote over parsed labels. An even split resolves to `tie_break`
/// (conservatively not_cross by default: a false "cross" is the expensive
/// mistake for a precision-critical predictor).
AggregateResult aggregate_repeats(std::span<const Label> labels,
                                  TieBreak tie_break = TieBreak::kNotCross);

struct ProtocolConfig {
  int repeats = 5;  // odd, so full-parse majority votes cannot tie
  ParseMode parse_mode = ParseMode::kStrict;
  TieBreak tie_break = TieBreak::kNotCross;
};

struct RepeatOutcome {
  std::string text;
  std::optional<Label> label;
  bool salvaged = false;
  std::string parse_error;  // non-empty iff label is absent
  std::int64_t latency_ms = 0;

  bool operator==(const RepeatOutcome&) const = default;
};

struct PredictionRecord {
  std::string instance_id;
  std::string config_label;
  Label ground_truth = Label::kNotCross;
  std::vector<RepeatOutcome> repeats;
  std::optional<Label> aggregated;  // absent when every repeat failed to parse
  std::optional<double> score;
  bool unanimous = false;

  bool evaluation_failed() const { return !aggregated.has_value(); }
  bool operator==(const PredictionRecord&) const = default;
};

/// One JSON-lines record, schema mirroring the struct; keys are sorted so
/// serialization is byte-stable.
std::string record_to_jsonl(const PredictionRecord& record);
PredictionRecord record_from_jsonl(const std::string& line);

struct RunContext {
  ClipStore* clips = nullptr;
  const TemplateSet* templates = nullptr;
  Predictor* predictor = nullptr;
  ProtocolConfig protocol;
};

/// Full per-instance protocol: window -> clip -> prompt -> R sequential
/// predictions -> parse -> aggregate. Raw response text is persisted
/// verbatim in the record; upstream errors propagate annotated with the
/// instance and config.
PredictionRecord run_instance(const RunContext& ctx, const PedestrianInstance& instance,
                              const ModalityConfig& config);

/// Evaluates every instance under one configuration. Instances run
/// concurrently up to `max_concurrency`; repeats within an instance stay
/// sequential. Records are returned in instance order; `record_sink`, when
/// set, sees each record as it completes (any order, serialized calls).
std::vector<PredictionRecord> evaluate_config(
    const RunContext& ctx, std::span<const PedestrianInstance> instances,
    const ModalityConfig& config, int max_concurrency,
    const std::function<void(const PredictionRecord&)>& record_sink = {});

}  // namespace bfpip
