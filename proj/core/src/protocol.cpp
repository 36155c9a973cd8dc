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

#include "bfpip/protocol.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <mutex>
#include <thread>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "bfpip/error.hpp"

namespace bfpip {

using nlohmann::json;

std::string_view to_string(ParseMode mode) {
  return mode == ParseMode::kStrict ? "strict" : "salvage";
}

std::optional<ParseMode> parse_mode_from_string(std::string_view s) {
  if (s == "strict") return ParseMode::kStrict;
  if (s == "salvage") return ParseMode::kSalvage;
  return std::nullopt;
}

std::string_view to_string(TieBreak tie) {
  return tie == TieBreak::kNotCross ? "not_cross" : "cross";
}

std::optional<TieBreak> tie_break_from_string(std::string_view s) {
  if (s == "not_cross") return TieBreak::kNotCross;
  if (s == "cross") return TieBreak::kCross;
  return std::nullopt;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Strips one surrounding ```fence```. Only an empty or "json" info string is
// accepted: anything else could smuggle a label literal past the
// both-literals rejection rule.
std::optional<std::string_view> strip_fence(std::string_view s) {
  if (!s.starts_with("```")) return s;
  const size_t newline = s.find('\n');
  if (newline == std::string_view::npos) return std::nullopt;
  std::string info(trim(s.substr(3, newline - 3)));
  std::transform(info.begin(), info.end(), info.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (!info.empty() && info != "json") return std::nullopt;
  if (!s.ends_with("```")) return std::nullopt;
  std::string_view body = s.substr(newline + 1, s.size() - newline - 1 - 3);
  if (body.find("```") != std::string_view::npos) return std::nullopt;
  return trim(body);
}

std::optional<Label> strict_parse(std::string_view raw) {
  const auto body = strip_fence(trim(raw));
  if (!body) return std::nullopt;
  const json doc = json::parse(*body, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.is_object() || doc.size() != 1 ||
      !doc.contains("intention") || !doc["intention"].is_string()) {
    return std::nullopt;
  }
  return label_from_string(doc["intention"].get<std::string>());
}

bool is_token_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
}

// Whole-token occurrences of `token` in lowercase text. "cross" inside
// "not_cross" does not count: the preceding underscore is a token character.
int count_token(std::string_view text, std::string_view token) {
  int count = 0;
  size_t pos = 0;
  while ((pos = text.find(token, pos)) != std::string_view::npos) {
    const bool left_ok = pos == 0 || !is_token_char(text[pos - 1]);
    const size_t end = pos + token.size();
    const bool right_ok = end == text.size() || !is_token_char(text[end]);
    if (left_ok && right_ok) ++count;
    ++pos;
  }
  return count;
}

std::optional<Label> salvage_parse(std::string_view raw) {
  std::string lower(raw);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  const bool has_not_cross = count_token(lower, "not_cross") > 0;
  const bool has_cross = count_token(lower, "cross") > 0;
  if (has_cross == has_not_cross) return std::nullopt;  // both or neither
  return has_cross ? Label::kCross : Label::kNotCross;
}

std::string excerpt(std::string_view raw) {
  constexpr size_t kMax = 120;
  std::string out(raw.substr(0, kMax));
  if (raw.size() > kMax) out += "...";
  return out;
}

}  // namespace

ParsedLabel parse_response(std::string_view raw, ParseMode mode) {
  if (const auto label = strict_parse(raw)) {
    return {*label, false};
  }
  if (mode == ParseMode::kSalvage) {
    if (const auto label = salvage_parse(raw)) {
      return {*label, true};
    }
  }
  throw Error(ErrorKind::kMalformedResponse, excerpt(raw));
}

AggregateResult aggregate_repeats(std::span<const Label> labels, TieBreak tie_break) {
  if (labels.empty()) {
    throw Error(ErrorKind::kInvalidValue, "aggregate_repeats needs at least one parsed label");
  }
  const long cross = std::count(labels.begin(), labels.end(), Label::kCross);
  const long not_cross = static_cast<long>(labels.size()) - cross;

  AggregateResult result;
  result.score = static_cast<double>(cross) / static_cast<double>(labels.size());
  result.unanimous = cross == 0 || not_cross == 0;
  if (cross > not_cross) {
    result.label = Label::kCross;
  } else if (cross < not_cross) {
    result.label = Label::kNotCross;
  } else {
    result.label = tie_break == TieBreak::kCross ? Label::kCross : Label::kNotCross;
  }
  return result;
}

std::string record_to_jsonl(const PredictionRecord& record) {
  json repeats = json::array();
  for (const RepeatOutcome& r : record.repeats) {
    json node;
    node["text"] = r.text;
    node["label"] = r.label ? json(std::string(to_string(*r.label))) : json(nullptr);
    node["salvaged"] = r.salvaged;
    node["parse_error"] = r.parse_error;
    node["latency_ms"] = r.latency_ms;
    repeats.push_back(std::move(node));
  }
  json doc;
  doc["instance_id"] = record.instance_id;
  doc["config"] = record.config_label;
  doc["ground_truth"] = std::string(to_string(record.ground_truth));
  doc["repeats"] = std::move(repeats);
  doc["aggregated"] =
      record.aggregated ? json(std::string(to_string(*record.aggregated))) : json(nullptr);
  doc["score"] = record.score ? json(*record.score) : json(nullptr);
  doc["unanimous"] = record.unanimous;
  return doc.dump();
}

PredictionRecord record_from_jsonl(const std::string& line) {
  const json doc = json::parse(line, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw Error(ErrorKind::kSchemaViolation, "record line is not a JSON object");
  }
  try {
    PredictionRecord record;
    record.instance_id = doc.at("instance_id").get<std::string>();
    record.config_label = doc.at("config").get<std::string>();
    const auto gt = label_from_string(doc.at("ground_truth").get<std::string>());
    if (!gt) throw Error(ErrorKind::kSchemaViolation, "bad ground_truth label");
    record.ground_truth = *gt;
    for (const json& node : doc.at("repeats")) {
      RepeatOutcome r;
      r.text = node.at("text").get<std::string>();
      if (!node.at("label").is_null()) {
        const auto label = label_from_string(node.at("label").get<std::string>());
        if (!label) throw Error(ErrorKind::kSchemaViolation, "bad repeat label");
        r.label = label;
      }
      r.salvaged = node.at("salvaged").get<bool>();
      r.parse_error = node.at("parse_error").get<std::string>();
      r.latency_ms = node.at("latency_ms").get<std::int64_t>();
      record.repeats.push_back(std::move(r));
    }
    if (!doc.at("aggregated").is_null()) {
      const auto label = label_from_string(doc.at("aggregated").get<std::string>());
      if (!label) throw Error(ErrorKind::kSchemaViolation, "bad aggregated label");
      record.aggregated = label;
    }
    if (!doc.at("score").is_null()) record.score = doc.at("score").get<double>();
    record.unanimous = doc.at("unanimous").get<bool>();
    return record;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kSchemaViolation, fmt::format("record line: {}", e.what()));
  }
}

PredictionRecord run_instance(const RunContext& ctx, const PedestrianInstance& instance,
                              const ModalityConfig& config) {
  try {
    if (!instance.ground_truth) {
      throw Error(ErrorKind::kInvalidValue, "instance has no ground truth");
    }
    const ObservationWindow window = compute_window(instance.event_frame);
    const ClipBundle clip =
        ctx.clips->get_or_build(instance, window, config.annotated_video);
    const PromptPackage prompt = build_prompt(instance, config, *ctx.templates, clip);

    InferenceTask task;
    task.instance = &instance;
    task.window = window;

    PredictionRecord record;
    record.instance_id = instance.instance_id;
    record.config_label = config.label();
    record.ground_truth = *instance.ground_truth;

    std::vector<Label> parsed;
    for (int r = 0; r < ctx.protocol.repeats; ++r) {
      const RawResponse response = ctx.predictor->predict(prompt, task, r);
      RepeatOutcome outcome;
      outcome.text = response.text;
      outcome.latency_ms = response.latency_ms;
      try {
        const ParsedLabel label = parse_response(response.text, ctx.protocol.parse_mode);
        outcome.label = label.value;
        outcome.salvaged = label.salvaged;
        parsed.push_back(label.value);
      } catch (const Error& e) {
        outcome.parse_error = e.message();
      }
      record.repeats.push_back(std::move(outcome));
    }

    if (!parsed.empty()) {
      const AggregateResult agg = aggregate_repeats(parsed, ctx.protocol.tie_break);
      record.aggregated = agg.label;
      record.score = agg.score;
      // Stability means all R calls parsed and agreed; a parse failure
      // counts as disagreement.
      record.unanimous =
          agg.unanimous && parsed.size() == static_cast<size_t>(ctx.protocol.repeats);
    }
    return record;
  } catch (const Error& e) {
    throw e.with_context(
        fmt::format("instance {} config {}", instance.instance_id, config.label()));
  }
}

std::vector<PredictionRecord> evaluate_config(
    const RunContext& ctx, std::span<const PedestrianInstance> instances,
    const ModalityConfig& config, int max_concurrency,
    const std::function<void(const PredictionRecord&)>& record_sink) {
  std::vector<PredictionRecord> records(instances.size());
  if (instances.empty()) return records;

  const int workers = std::max(1, std::min<int>(max_concurrency,
                                                static_cast<int>(instances.size())));
  std::atomic<size_t> next{0};
  std::mutex sink_mutex;
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    while (true) {
      const size_t i = next.fetch_add(1);
      if (i >= instances.size()) return;
      {
        std::lock_guard lock(failure_mutex);
        if (failure) return;
      }
      try {
        PredictionRecord record = run_instance(ctx, instances[i], config);
        if (record_sink) {
          std::lock_guard lock(sink_mutex);
          record_sink(record);
        }
        records[i] = std::move(record);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  if (failure) std::rethrow_exception(failure);
  return records;
}

}  // namespace bfpip
