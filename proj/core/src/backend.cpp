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

#include "bfpip/backend.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "bfpip/digest.hpp"
#include "bfpip/error.hpp"
#include "bfpip/fs.hpp"

namespace bfpip {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::kRemote: return "remote";
    case BackendKind::kScripted: return "scripted";
    case BackendKind::kHeuristic: return "heuristic";
  }
  return "scripted";
}

std::optional<BackendKind> backend_kind_from_string(std::string_view s) {
  if (s == "remote") return BackendKind::kRemote;
  if (s == "scripted") return BackendKind::kScripted;
  if (s == "heuristic") return BackendKind::kHeuristic;
  return std::nullopt;
}

std::string_view to_string(TransportStatus status) {
  switch (status) {
    case TransportStatus::kOk: return "ok";
    case TransportStatus::kRateLimited: return "rate_limited";
    case TransportStatus::kTransportError: return "transport_error";
    case TransportStatus::kModelError: return "model_error";
  }
  return "ok";
}

std::optional<TransportStatus> transport_status_from_string(std::string_view s) {
  if (s == "ok") return TransportStatus::kOk;
  if (s == "rate_limited") return TransportStatus::kRateLimited;
  if (s == "transport_error") return TransportStatus::kTransportError;
  if (s == "model_error") return TransportStatus::kModelError;
  return std::nullopt;
}

std::string cache_key(const PredictorSpec& spec, const PromptPackage& prompt,
                      int repeat_index) {
  return sha256_fields({spec.model_id, prompt.prompt_digest, prompt.media.content_digest,
                        fmt::format("{}", spec.temperature), std::to_string(spec.seed),
                        std::to_string(repeat_index)});
}

// --- ResponseCache -----------------------------------------------------------

ResponseCache::ResponseCache(fs::path root) : root_(std::move(root)) {}

fs::path ResponseCache::entry_path(const std::string& key) const {
  return root_ / key.substr(0, 2) / key.substr(2, 2) / (key + ".response");
}

std::optional<RawResponse> ResponseCache::lookup(const std::string& key) const {
  const fs::path path = entry_path(key);
  if (!fs::exists(path)) return std::nullopt;
  const json doc = json::parse(read_file(path), nullptr, false);
  if (doc.is_discarded()) {
    throw Error(ErrorKind::kInternal, "corrupt cache entry: " + path.string());
  }
  RawResponse response;
  response.text = doc.at("text").get<std::string>();
  response.latency_ms = doc.at("latency_ms").get<std::int64_t>();
  response.attempt_count = doc.at("attempt_count").get<int>();
  const auto status = transport_status_from_string(doc.at("transport_status").get<std::string>());
  if (!status) {
    throw Error(ErrorKind::kInternal, "corrupt cache entry status: " + path.string());
  }
  response.transport_status = *status;
  return response;
}

void ResponseCache::store(const std::string& key, const RawResponse& response) const {
  json doc;
  doc["text"] = response.text;
  doc["latency_ms"] = response.latency_ms;
  doc["transport_status"] = std::string(to_string(response.transport_status));
  doc["attempt_count"] = response.attempt_count;
  atomic_write_file(entry_path(key), doc.dump());
}

ResponseCache::Stats ResponseCache::stats() const {
  Stats stats;
  if (!fs::exists(root_)) return stats;
  for (const auto& entry : fs::recursive_directory_iterator(root_)) {
    if (entry.is_regular_file() && entry.path().extension() == ".response") {
      ++stats.entries;
      stats.bytes += entry.file_size();
    }
  }
  return stats;
}

std::size_t ResponseCache::purge() const {
  const Stats before = stats();
  std::error_code ec;
  fs::remove_all(root_, ec);
  return before.entries;
}

// --- Heuristic ---------------------------------------------------------------

RawResponse heuristic_predict(const PedestrianInstance& instance,
                              const ObservationWindow& window, double threshold_px) {
  const FrameAnnotation* first = instance.frame(window.start_frame);
  const FrameAnnotation* last = instance.frame(window.end_frame);
  if (first == nullptr || !first->bbox) {
    throw Error(ErrorKind::kMissingAnnotation, fmt::format("{} (no bbox)", window.start_frame));
  }
  if (last == nullptr || !last->bbox) {
    throw Error(ErrorKind::kMissingAnnotation, fmt::format("{} (no bbox)", window.end_frame));
  }
  if (!instance.frame_dims) {
    throw Error(ErrorKind::kInvalidValue,
                "heuristic backend needs frame_dims to locate the centerline");
  }
  const double centerline = instance.frame_dims->first / 2.0;
  const double toward = std::abs(first->bbox->center_x() - centerline) -
                        std::abs(last->bbox->center_x() - centerline);
  RawResponse response;
  response.text = toward >= threshold_px ? R"({"intention": "cross"})"
                                         : R"({"intention": "not_cross"})";
  return response;
}

RawResponse HeuristicBackend::run(const PromptPackage&, const InferenceTask& task) {
  if (task.instance == nullptr) {
    throw Error(ErrorKind::kInvalidValue, "heuristic backend needs the instance annotations");
  }
  return heuristic_predict(*task.instance, task.window, threshold_px_);
}

// --- Scripted ----------------------------------------------------------------

ScriptedBackend::ScriptedBackend(const fs::path& jsonl_path) {
  std::ifstream in(jsonl_path);
  if (!in) {
    throw Error(ErrorKind::kFileNotFound, "scripted responses not found: " + jsonl_path.string());
  }
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const json doc = json::parse(line, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
      throw Error(ErrorKind::kSchemaViolation,
                  fmt::format("{}:{}: not a JSON object", jsonl_path.string(), line_no));
    }
    try {
      responses_[{doc.at("instance_id").get<std::string>(), doc.at("config").get<std::string>(),
                  doc.at("repeat_index").get<int>()}] = doc.at("text").get<std::string>();
    } catch (const json::exception& e) {
      throw Error(ErrorKind::kSchemaViolation,
                  fmt::format("{}:{}: {}", jsonl_path.string(), line_no, e.what()));
    }
  }
}

RawResponse ScriptedBackend::run(const PromptPackage& prompt, const InferenceTask& task) {
  const auto it = responses_.find(
      {prompt.instance_id, prompt.config.label(), task.repeat_index});
  if (it == responses_.end()) {
    throw Error(ErrorKind::kInvalidValue,
                fmt::format("no scripted response for ({}, {}, {})", prompt.instance_id,
                            prompt.config.label(), task.repeat_index));
  }
  RawResponse response;
  response.text = it->second;
  return response;
}

// --- Remote ------------------------------------------------------------------

GenerateContentAdapter::GenerateContentAdapter(std::string endpoint, std::string api_key)
    : endpoint_(std::move(endpoint)), api_key_(std::move(api_key)) {}

std::string GenerateContentAdapter::build_request_body(
    const std::vector<std::string>& parts_before_media, const MediaPayload& media,
    const std::vector<std::string>& parts_after_media, const DecodeParams& params) {
  json parts = json::array();
  for (const auto& text : parts_before_media) parts.push_back({{"text", text}});
  parts.push_back({{"inline_data",
                    {{"mime_type", media.mime_type}, {"data", base64_encode(media.bytes)}}}});
  for (const auto& text : parts_after_media) parts.push_back({{"text", text}});

  json body;
  body["model"] = params.model_id;
  body["contents"] = json::array({{{"role", "user"}, {"parts", std::move(parts)}}});
  body["generationConfig"] = {{"temperature", params.temperature}, {"seed", params.seed}};
  return body.dump();
}

VendorAdapter::Attempt GenerateContentAdapter::send(
    const std::vector<std::string>& parts_before_media, const MediaPayload& media,
    const std::vector<std::string>& parts_after_media, const DecodeParams& params) {
  Attempt attempt;

  const auto scheme_end = endpoint_.find("://");
  if (scheme_end == std::string::npos) {
    attempt.status = TransportStatus::kTransportError;
    attempt.error = "endpoint must be an http(s) URL: " + endpoint_;
    return attempt;
  }
  const auto path_start = endpoint_.find('/', scheme_end + 3);
  const std::string base =
      path_start == std::string::npos ? endpoint_ : endpoint_.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : endpoint_.substr(path_start);

  httplib::Client client(base);
  client.set_connection_timeout(static_cast<int>(params.timeout_s), 0);
  client.set_read_timeout(static_cast<int>(params.timeout_s), 0);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("x-goog-api-key", api_key_);

  const std::string body =
      build_request_body(parts_before_media, media, parts_after_media, params);
  const httplib::Result result = client.Post(path, headers, body, "application/json");

  if (!result) {
    attempt.status = TransportStatus::kTransportError;
    attempt.error = "transport: " + httplib::to_string(result.error());
    return attempt;
  }
  attempt.http_status = result->status;
  if (result->status == 429) {
    attempt.status = TransportStatus::kRateLimited;
    attempt.error = "rate limited";
    return attempt;
  }
  if (result->status >= 500) {
    attempt.status = TransportStatus::kTransportError;
    attempt.error = fmt::format("server error {}", result->status);
    return attempt;
  }
  if (result->status != 200) {
    attempt.status = TransportStatus::kModelError;
    attempt.error = result->body.substr(0, 200);
    return attempt;
  }

  const json doc = json::parse(result->body, nullptr, false);
  if (doc.is_discarded()) {
    attempt.status = TransportStatus::kModelError;
    attempt.error = "unparseable vendor response: " + result->body.substr(0, 200);
    return attempt;
  }
  std::string text;
  if (doc.contains("candidates") && doc["candidates"].is_array() &&
      !doc["candidates"].empty()) {
    const json& content = doc["candidates"][0].value("content", json::object());
    for (const json& part : content.value("parts", json::array())) {
      if (part.contains("text")) text += part["text"].get<std::string>();
    }
  }
  if (text.empty()) {
    attempt.status = TransportStatus::kModelError;
    attempt.error = "vendor response carried no text: " + result->body.substr(0, 200);
    return attempt;
  }
  attempt.status = TransportStatus::kOk;
  attempt.text = std::move(text);
  return attempt;
}

RemoteBackend::RemoteBackend(PredictorSpec spec, std::unique_ptr<VendorAdapter> adapter)
    : spec_(std::move(spec)), adapter_(std::move(adapter)) {}

RawResponse RemoteBackend::run(const PromptPackage& prompt, const InferenceTask&) {
  if (spec_.offline) {
    throw Error(ErrorKind::kTransportFailure,
                "network disabled (offline mode) and response not cached");
  }

  MediaPayload media;
  media.mime_type = prompt.media.mime_type();
  media.bytes = read_file_bytes(prompt.media.media_ref);

  DecodeParams params;
  params.model_id = spec_.model_id;
  params.temperature = spec_.temperature;
  params.seed = spec_.seed;
  params.timeout_s = spec_.timeout_s;

  VendorAdapter::Attempt last;
  const auto start = std::chrono::steady_clock::now();
  for (int attempt = 1; attempt <= spec_.retry.max_attempts; ++attempt) {
    ++attempts_;
    last = adapter_->send(prompt.parts_before_media(), media, prompt.parts_after_media(), params);
    if (last.status == TransportStatus::kOk) {
      RawResponse response;
      response.text = std::move(last.text);
      response.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                                std::chrono::steady_clock::now() - start)
                                .count();
      response.attempt_count = attempt;
      return response;
    }
    if (last.status == TransportStatus::kModelError) {
      throw Error(ErrorKind::kVendorRejection,
                  fmt::format("status {}: {}", last.http_status, last.error));
    }
    if (attempt < spec_.retry.max_attempts) {
      const auto delay =
          std::chrono::milliseconds(spec_.retry.base_backoff_ms) * (1LL << (attempt - 1));
      std::this_thread::sleep_for(delay);
    }
  }
  if (last.status == TransportStatus::kRateLimited) {
    throw Error(ErrorKind::kRateLimitExhausted,
                fmt::format("gave up after {} attempts", spec_.retry.max_attempts));
  }
  throw Error(ErrorKind::kTransportFailure,
              fmt::format("gave up after {} attempts: {}", spec_.retry.max_attempts, last.error));
}

// --- Predictor ---------------------------------------------------------------

Predictor::Predictor(PredictorSpec spec, ResponseCache* cache,
                     std::unique_ptr<PredictorBackend> backend)
    : spec_(std::move(spec)), cache_(cache), backend_(std::move(backend)) {}

RawResponse Predictor::predict(const PromptPackage& prompt, const InferenceTask& task,
                               int repeat_index) {
  const std::string key = cache_key(spec_, prompt, repeat_index);
  if (cache_ != nullptr) {
    if (auto cached = cache_->lookup(key)) {
      ++hits_;
      return *cached;
    }
  }
  ++misses_;
  InferenceTask keyed = task;
  keyed.repeat_index = repeat_index;
  const RawResponse response = backend_->run(prompt, keyed);
  if (cache_ != nullptr) {
    cache_->store(key, response);
  }
  return response;
}

std::unique_ptr<Predictor> Predictor::create(const PredictorSpec& spec, ResponseCache* cache) {
  std::unique_ptr<PredictorBackend> backend;
  switch (spec.kind) {
    case BackendKind::kScripted:
      backend = std::make_unique<ScriptedBackend>(spec.script_path);
      break;
    case BackendKind::kHeuristic:
      backend = std::make_unique<HeuristicBackend>(spec.heuristic_threshold_px);
      break;
    case BackendKind::kRemote: {
      PredictorSpec effective = spec;
      if (const char* url = std::getenv("BFPIP_API_URL"); url != nullptr && *url != '\0') {
        effective.endpoint = url;
      }
      if (effective.endpoint.empty()) {
        throw Error(ErrorKind::kInvalidValue,
                    "remote backend needs backend.endpoint or BFPIP_API_URL");
      }
      const char* key = std::getenv("BFPIP_API_KEY");
      auto adapter = std::make_unique<GenerateContentAdapter>(effective.endpoint,
                                                              key != nullptr ? key : "");
      return std::make_unique<Predictor>(effective, cache,
                                         std::make_unique<RemoteBackend>(effective,
                                                                         std::move(adapter)));
    }
  }
  return std::make_unique<Predictor>(spec, cache, std::move(backend));
}

}  // namespace bfpip
