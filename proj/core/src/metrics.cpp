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

#include "bfpip/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "bfpip/error.hpp"

namespace bfpip {

ConfusionMatrix confusion_matrix(std::span<const PredictionRecord> records) {
  if (records.empty()) {
    throw Error(ErrorKind::kEmptyRecordSet, "no records to score");
  }
  ConfusionMatrix cm;
  for (const PredictionRecord& r : records) {
    if (!r.aggregated) {
      throw Error(ErrorKind::kInvalidValue,
                  fmt::format("record {} has no aggregated label", r.instance_id));
    }
    const bool predicted_cross = *r.aggregated == Label::kCross;
    const bool truth_cross = r.ground_truth == Label::kCross;
    if (predicted_cross && truth_cross) ++cm.tp;
    else if (predicted_cross && !truth_cross) ++cm.fp;
    else if (!predicted_cross && truth_cross) ++cm.fn;
    else ++cm.tn;
  }
  return cm;
}

ConfusionMatrix confusion_from_counts(long tp, long fp, long fn, long tn) {
  ConfusionMatrix cm;
  cm.tp = tp;
  cm.fp = fp;
  cm.fn = fn;
  cm.tn = tn;
  return cm;
}

EvalMetrics metrics_from_confusion(const ConfusionMatrix& cm) {
  EvalMetrics m;
  m.n = cm.total();
  if (m.n > 0) {
    m.acc = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(m.n);
  }
  if (cm.tp + cm.fp > 0) {
    m.precision = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fp);
  }
  if (cm.tp + cm.fn > 0) {
    m.recall = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn);
  }
  if (m.precision && m.recall && (*m.precision + *m.recall) > 0) {
    m.f1 = 2 * *m.precision * *m.recall / (*m.precision + *m.recall);
  }
  return m;
}

EvalMetrics classification_metrics(std::span<const PredictionRecord> records) {
  return metrics_from_confusion(confusion_matrix(records));
}

std::optional<double> auc_score(std::span<const double> scores,
                                std::span<const Label> truths) {
  if (scores.size() != truths.size()) {
    throw Error(ErrorKind::kLengthMismatch,
                fmt::format("{} scores vs {} truths", scores.size(), truths.size()));
  }
  const long n_pos = std::count(truths.begin(), truths.end(), Label::kCross);
  const long n_neg = static_cast<long>(truths.size()) - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;

  // Average-rank formulation: AUC = (R_pos - n_pos(n_pos+1)/2) / (n_pos*n_neg)
  // where R_pos sums the average ranks of positive scores. Ties inside a rank
  // group share the mean rank, which is exactly the 0.5 pairwise credit.
  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] < scores[b]; });

  double rank_sum_pos = 0.0;
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (size_t k = i; k < j; ++k) {
      if (truths[order[k]] == Label::kCross) rank_sum_pos += avg_rank;
    }
    i = j;
  }
  const double pairs = static_cast<double>(n_pos) * static_cast<double>(n_neg);
  return (rank_sum_pos - static_cast<double>(n_pos) * (n_pos + 1) / 2.0) / pairs;
}

StabilityStats stability_summary(std::span<const PredictionRecord> records) {
  if (records.empty()) {
    throw Error(ErrorKind::kEmptyRecordSet, "no records to summarize");
  }
  long unanimous = 0;
  long repeats_total = 0;
  long repeats_failed = 0;
  for (const PredictionRecord& r : records) {
    if (r.unanimous) ++unanimous;
    repeats_total += static_cast<long>(r.repeats.size());
    for (const RepeatOutcome& rep : r.repeats) {
      if (!rep.label) ++repeats_failed;
    }
  }
  StabilityStats stats;
  stats.unanimity_rate = static_cast<double>(unanimous) / static_cast<double>(records.size());
  stats.parse_failure_rate =
      repeats_total == 0 ? 0.0
                         : static_cast<double>(repeats_failed) / static_cast<double>(repeats_total);
  return stats;
}

double round2_half_up(double x) {
  return std::floor(x * 100.0 + 0.5) / 100.0;
}

}  // namespace bfpip
