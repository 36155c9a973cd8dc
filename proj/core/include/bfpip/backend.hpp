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

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bfpip/clipper.hpp"
#include "bfpip/dataset.hpp"
#include "bfpip/prompt.hpp"

namespace bfpip {

enum class BackendKind { kRemote, kScripted, kHeuristic };

std::string_view to_string(BackendKind kind);
std::optional<BackendKind> backend_kind_from_string(std::string_view s);

struct RetryPolicy {
  int max_attempts = 5;
  int base_backoff_ms = 1000;  // doubles per retry
};

/// Deterministic decoding is the protocol default (temperature 0, seed 0);
/// other values are accepted only when the config explicitly allows
/// protocol deviations, and are stamped into every report.
struct PredictorSpec {
  BackendKind kind = BackendKind::kScripted;
  std::string model_id = "offline";
  double temperature = 0.0;
  long long seed = 0;
  std::string endpoint;  // remote only
  double timeout_s = 120.0;
  RetryPolicy retry;
  bool offline = false;  // remote: refuse any network operation
  std::filesystem::path script_path;        // scripted
  double heuristic_threshold_px = 20.0;     // heuristic
};

enum class TransportStatus { kOk, kRateLimited, kTransportError, kModelError };

std::string_view to_string(TransportStatus status);
std::optional<TransportStatus> transport_status_from_string(std::string_view s);

struct RawResponse {
  std::string text;
  std::int64_t latency_ms = 0;
  TransportStatus transport_status = TransportStatus::kOk;
  int attempt_count = 1;

  bool operator==(const RawResponse&) const = default;
};

/// Content-addressed key over everything that can change a response:
/// (model_id, prompt digest, media digest, temperature, seed, repeat_index).
/// repeat_index is included so the R repeated calls stay distinct entries
/// and cross-call variance remains observable.
std::string cache_key(const PredictorSpec& spec, const PromptPackage& prompt, int repeat_index);

// One file per key under cache/<k[0:2]>/<k[2:4]>/<k>.response, written via
// temp file + atomic rename; safe under concurrent workers.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path root);

  std::optional<RawResponse> lookup(const std::string& key) const;
  void store(const std::string& key, const RawResponse& response) const;

  struct Stats {
    std::size_t entries = 0;
    std::uintmax_t bytes = 0;
  };
  Stats stats() const;
  std::size_t purge() const;

  std::filesystem::path entry_path(const std::string& key) const;
  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path root_;
};

struct InferenceTask {
  const PedestrianInstance* instance = nullptr;
  ObservationWindow window;
  int repeat_index = 0;
};

class PredictorBackend {
 public:
  virtual ~PredictorBackend() = default;
  virtual RawResponse run(const PromptPackage& prompt, const InferenceTask& task) = 0;
};

/// Offline smoke-test oracle: compares the horizontal displacement of the box
/// centroid between the first and last window frames toward the image
/// vertical centerline against `threshold_px`.
RawResponse heuristic_predict(const PedestrianInstance& instance,
                              const ObservationWindow& window, double threshold_px);

class HeuristicBackend : public PredictorBackend {
 public:
  explicit HeuristicBackend(double threshold_px) : threshold_px_(threshold_px) {}
  RawResponse run(const PromptPackage& prompt, const InferenceTask& task) override;

 private:
  double threshold_px_;
};

/// Replays responses from a JSON-lines file of
/// {instance_id, config, repeat_index, text}, enabling bit-reproducible
/// end-to-end runs.
class ScriptedBackend : public PredictorBackend {
 public:
  explicit ScriptedBackend(const std::filesystem::path& jsonl_path);
  RawResponse run(const PromptPackage& prompt, const InferenceTask& task) override;

  std::size_t size() const { return responses_.size(); }

 private:
  std::map<std::tuple<std::string, std::string, int>, std::string> responses_;
};

struct MediaPayload {
  std::string mime_type;
  std::vector<std::uint8_t> bytes;
};

struct DecodeParams {
  std::string model_id;
  double temperature = 0.0;
  long long seed = 0;
  double timeout_s = 120.0;
};

/// One wire-format adapter per vendor. A call is a single round trip; the
/// retry loop lives in RemoteBackend.
class VendorAdapter {
 public:
  struct Attempt {
    TransportStatus status = TransportStatus::kTransportError;
    int http_status = 0;
    std::string text;   // model text when status == kOk
    std::string error;  // diagnostic otherwise
  };

  virtual ~VendorAdapter() = default;
  virtual Attempt send(const std::vector<std::string>& parts_before_media,
                       const MediaPayload& media,
                       const std::vector<std::string>& parts_after_media,
                       const DecodeParams& params) = 0;
};

/// Speaks a generateContent-style JSON-over-HTTP wire format: text parts and
/// an inline base64 media part in one user turn, deterministic decode
/// parameters in generationConfig.
class GenerateContentAdapter : public VendorAdapter {
 public:
  GenerateContentAdapter(std::string endpoint, std::string api_key);
  Attempt send(const std::vector<std::string>& parts_before_media, const MediaPayload& media,
               const std::vector<std::string>& parts_after_media,
               const DecodeParams& params) override;

  /// Request body builder, exposed for tests pinning the wire format.
  static std::string build_request_body(const std::vector<std::string>& parts_before_media,
                                        const MediaPayload& media,
                                        const std::vector<std::string>& parts_after_media,
                                        const DecodeParams& params);

 private:
  std::string endpoint_;
  std::string api_key_;
};

// Bounded retries with exponential backoff; retries only rate-limited and
// transport errors. Model-content errors are deterministic at temperature 0
// and are surfaced immediately.
class RemoteBackend : public PredictorBackend {
 public:
  RemoteBackend(PredictorSpec spec, std::unique_ptr<VendorAdapter> adapter);
  RawResponse run(const PromptPackage& prompt, const InferenceTask& task) override;

  /// Total network attempts made; zero when every call was served upstream
  /// from cache or offline mode blocked dispatch.
  long attempts_made() const { return attempts_.load(); }

 private:
  PredictorSpec spec_;
  std::unique_ptr<VendorAdapter> adapter_;
  std::atomic<long> attempts_{0};
};

/// Caching front door over any backend: cache hits return the stored
/// response byte-exactly with no backend dispatch.
class Predictor {
 public:
  Predictor(PredictorSpec spec, ResponseCache* cache,
            std::unique_ptr<PredictorBackend> backend);

  RawResponse predict(const PromptPackage& prompt, const InferenceTask& task, int repeat_index);

  const PredictorSpec& spec() const { return spec_; }
  long cache_hits() const { return hits_.load(); }
  long cache_misses() const { return misses_.load(); }
  PredictorBackend* backend() { return backend_.get(); }

  /// Builds the backend named by the spec. BFPIP_API_URL / BFPIP_API_KEY
  /// supply the remote endpoint and credential.
  static std::unique_ptr<Predictor> create(const PredictorSpec& spec, ResponseCache* cache);

 private:
  PredictorSpec spec_;
  ResponseCache* cache_;
  std::unique_ptr<PredictorBackend> backend_;
  std::atomic<long> hits_{0};
  std::atomic<long> misses_{0};
};

}  // namespace bfpip
