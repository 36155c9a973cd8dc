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

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bfpip/label.hpp"
#include "bfpip/protocol.hpp"

namespace bfpip {

/// Positive class is "cross" throughout.
struct ConfusionMatrix {
  long tp = 0;
  long fp = 0;
  long fn = 0;
  long tn = 0;

  long total() const { return tp + fp + fn + tn; }
  bool operator==(const ConfusionMatrix&) const = default;
};

/// Metrics with a zero denominator are null rather than 0: "no positive
/// predictions" is not the same outcome as "all positives wrong".
struct EvalMetrics {
  std::optional<double> acc;
  std::optional<double> auc;
  std::optional<double> f1;
  std::optional<double> precision;
  std::optional<double> recall;
  long n = 0;
  double parse_failure_rate = 0.0;
  double unanimity_rate = 0.0;
};

/// Counts the four confusion cells from aggregated labels vs ground truth.
/// Every record must carry an aggregated label; throws
/// Error{kEmptyRecordSet} on an empty input.
ConfusionMatrix confusion_matrix(std::span<const PredictionRecord> records);

/// ACC, P, R, F1 (auc left unset) from aggregated labels.
EvalMetrics classification_metrics(std::span<const PredictionRecord> records);

ConfusionMatrix confusion_from_counts(long tp, long fp, long fn, long tn);
EvalMetrics metrics_from_confusion(const ConfusionMatrix& cm);

/// Mann-Whitney AUC: over all (positive, negative) pairs, credit 1 when the
/// positive scores higher, 0.5 on ties. Null when either class is absent.
/// Implemented via average ranks; the O(n^2) pairwise form is the test
/// oracle. Throws Error{kLengthMismatch} when the spans disagree in size.
std::optional<double> auc_score(std::span<const double> scores, std::span<const Label> truths);

struct StabilityStats {
  double unanimity_rate = 0.0;
  double parse_failure_rate = 0.0;
};

StabilityStats stability_summary(std::span<const PredictionRecord> records);

/// Half-up rounding to 2 decimals, the display convention for report tables.
double round2_half_up(double x);

}  // namespace bfpip
