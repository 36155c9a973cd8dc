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

#include <doctest.h>

#include <atomic>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "bfpip/backend.hpp"
#include "bfpip/error.hpp"
#include "support/test_support.hpp"

using namespace bfpip;
using nlohmann::json;

namespace {

PromptPackage make_prompt(const std::filesystem::path& dir, const std::string& tag = "clip") {
  const auto inst = test::make_instance("ped_" + tag, "vid", 90, Label::kCross);
  const TemplateSet templates = test::load_canonical_templates();
  const ClipBundle clip = test::make_clip_bundle(dir, FrameSetMode::kRaw, tag);
  return build_prompt(inst, {false, false, true}, templates, clip);
}

PredictorSpec scripted_spec(const std::filesystem::path& jsonl) {
  PredictorSpec spec;
  spec.kind = BackendKind::kScripted;
  spec.model_id = "scripted";
  spec.script_path = jsonl;
  return spec;
}

// Local wire-format server with a scriptable status sequence.
class FakeVendorServer {
 public:
  explicit FakeVendorServer(std::vector<int> status_sequence)
      : statuses_(std::move(status_sequence)) {
    server_.Post("/v1/models/generate", [this](const httplib::Request& req,
                                               httplib::Response& res) {
      last_body_ = req.body;
      last_api_key_ = req.get_header_value("x-goog-api-key");
      const size_t i = std::min(calls_.fetch_add(1), statuses_.size() - 1);
      const int status = statuses_[i];
      if (status == 200) {
        json doc;
        doc["candidates"] = json::array(
            {{{"content", {{"parts", json::array({{{"text", response_text_}}})}}}}});
        res.set_content(doc.dump(), "application/json");
      } else {
        res.status = status;
        res.set_content("synthetic failure", "text/plain");
      }
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~FakeVendorServer() {
    server_.stop();
    thread_.join();
  }

  std::string endpoint() const {
    return fmt::format("http://127.0.0.1:{}/v1/models/generate", port_);
  }
  size_t calls() const { return calls_.load(); }
  const std::string& last_body() const { return last_body_; }
  const std::string& last_api_key() const { return last_api_key_; }
  void set_response_text(std::string text) { response_text_ = std::move(text); }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::vector<int> statuses_;
  std::atomic<size_t> calls_{0};
  std::string last_body_;
  std::string last_api_key_;
  std::string response_text_ = R"({"intention": "cross"})";
};

PredictorSpec remote_spec(const std::string& endpoint) {
  PredictorSpec spec;
  spec.kind = BackendKind::kRemote;
  spec.model_id = "test-model";
  spec.endpoint = endpoint;
  spec.timeout_s = 5;
  spec.retry.max_attempts = 5;
  spec.retry.base_backoff_ms = 1;  // keep retry tests fast
  return spec;
}

}  // namespace

TEST_CASE("cache keys separate every addressable input") {
  TempDir dir("backend");
  const PromptPackage prompt = make_prompt(dir.path());
  PredictorSpec spec = scripted_spec(dir.path() / "unused.jsonl");

  const std::string base = cache_key(spec, prompt, 0);
  CHECK(base == cache_key(spec, prompt, 0));
  CHECK(base != cache_key(spec, prompt, 1));

  PredictorSpec warm = spec;
  warm.temperature = 0.5;
  CHECK(base != cache_key(warm, prompt, 0));

  PredictorSpec seeded = spec;
  seeded.seed = 9;
  CHECK(base != cache_key(seeded, prompt, 0));

  const PromptPackage other = make_prompt(dir.path(), "other-media");
  CHECK(base != cache_key(spec, other, 0));
}

TEST_CASE("cache round trip is byte-exact across instances") {
  TempDir dir("cache");
  RawResponse response;
  response.text = "{\"intention\": \"cross\"}\nplus trailing context";
  response.latency_ms = 1234;
  response.attempt_count = 3;

  const std::string key(64, 'a');
  {
    ResponseCache cache(dir.path() / "cache");
    cache.store(key, response);
    CHECK(cache.lookup(key) == response);
  }
  // Fresh object over the same directory: simulates a process restart.
  ResponseCache reopened(dir.path() / "cache");
  CHECK(reopened.lookup(key) == response);
  CHECK(!reopened.lookup(std::string(64, 'b')).has_value());

  // Two-level hex fan-out layout.
  CHECK(reopened.entry_path(key) ==
        dir.path() / "cache" / "aa" / "aa" / (key + ".response"));

  CHECK(reopened.stats().entries == 1);
  CHECK(reopened.purge() == 1);
  CHECK(reopened.stats().entries == 0);
}

TEST_CASE("heuristic centerline displacement rule") {
  auto inst = test::make_instance("p", "v", 90, Label::kCross, 10.0, 0.0);
  const ObservationWindow window = compute_window(90);

  SUBCASE("no displacement stays not_cross") {
    const RawResponse r = heuristic_predict(inst, window, 20.0);
    CHECK(r.text == R"({"intention": "not_cross"})");
    CHECK(r.transport_status == TransportStatus::kOk);
  }

  SUBCASE("displacement toward the centerline crosses the threshold") {
    // frame width 64 -> centerline 32; walk from x=2 towards it.
    auto walker = test::make_instance("p2", "v", 90, Label::kCross, 2.0, 1.5);
    const RawResponse r = heuristic_predict(walker, window, 20.0);
    CHECK(r.text == R"({"intention": "cross"})");
  }

  SUBCASE("missing first box is MissingAnnotation") {
    inst.frames.front().bbox.reset();
    try {
      heuristic_predict(inst, window, 20.0);
      FAIL("expected MissingAnnotation");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kMissingAnnotation);
    }
  }
}

TEST_CASE("scripted backend replays by (instance, config, repeat)") {
  TempDir dir("scripted");
  const auto inst = test::make_instance("ped_a", "vid", 90, Label::kCross);
  test::write_scripted_responses(
      dir.path() / "responses.jsonl", {inst}, {ModalityConfig{false, false, true}}, 2,
      [](const PedestrianInstance&, const std::string&, int repeat) {
        return fmt::format(R"({{"intention": "{}"}})", repeat == 0 ? "cross" : "not_cross");
      });

  ScriptedBackend backend(dir.path() / "responses.jsonl");
  CHECK(backend.size() == 2);

  const TemplateSet templates = test::load_canonical_templates();
  const ClipBundle clip = test::make_clip_bundle(dir.path(), FrameSetMode::kRaw);
  const PromptPackage prompt = build_prompt(inst, {false, false, true}, templates, clip);

  InferenceTask task;
  task.instance = &inst;
  task.window = compute_window(inst.event_frame);

  task.repeat_index = 0;
  CHECK(backend.run(prompt, task).text == R"({"intention": "cross"})");
  task.repeat_index = 1;
  CHECK(backend.run(prompt, task).text == R"({"intention": "not_cross"})");
  task.repeat_index = 2;
  CHECK_THROWS_AS(backend.run(prompt, task), Error);
}

TEST_CASE("predictor serves repeats from cache without backend dispatch") {
  TempDir dir("predictor");
  const auto inst = test::make_instance("ped_a", "vid", 90, Label::kCross);
  test::write_scripted_responses(
      dir.path() / "responses.jsonl", {inst}, {ModalityConfig{false, false, true}}, 1,
      [](const auto&, const auto&, int) { return R"({"intention": "cross"})"; });

  PredictorSpec spec = scripted_spec(dir.path() / "responses.jsonl");
  ResponseCache cache(dir.path() / "cache");
  Predictor predictor(spec, &cache, std::make_unique<ScriptedBackend>(spec.script_path));

  const TemplateSet templates = test::load_canonical_templates();
  const ClipBundle clip = test::make_clip_bundle(dir.path(), FrameSetMode::kRaw);
  const PromptPackage prompt = build_prompt(inst, {false, false, true}, templates, clip);
  InferenceTask task;
  task.instance = &inst;
  task.window = compute_window(inst.event_frame);

  const RawResponse first = predictor.predict(prompt, task, 0);
  const RawResponse second = predictor.predict(prompt, task, 0);
  CHECK(first == second);
  CHECK(predictor.cache_misses() == 1);
  CHECK(predictor.cache_hits() == 1);
}

TEST_CASE("remote backend wire format and retry policy") {
  TempDir dir("remote");
  const PromptPackage prompt = make_prompt(dir.path());
  InferenceTask task;
  task.repeat_index = 0;

  SUBCASE("success carries the model text and attempt count 1") {
    FakeVendorServer server({200});
    ::setenv("BFPIP_API_KEY", "test-key-123", 1);
    RemoteBackend backend(remote_spec(server.endpoint()),
                          std::make_unique<GenerateContentAdapter>(server.endpoint(),
                                                                   "test-key-123"));
    const RawResponse r = backend.run(prompt, task);
    CHECK(r.text == R"({"intention": "cross"})");
    CHECK(r.attempt_count == 1);
    CHECK(r.transport_status == TransportStatus::kOk);
    CHECK(backend.attempts_made() == 1);
    CHECK(server.last_api_key() == "test-key-123");

    // Wire shape: stage1 + metadata text parts, inline media, stage2 after.
    const json body = json::parse(server.last_body());
    CHECK(body["model"] == "test-model");
    CHECK(body["generationConfig"]["temperature"] == 0.0);
    CHECK(body["generationConfig"]["seed"] == 0);
    const json& parts = body["contents"][0]["parts"];
    REQUIRE(parts.size() == 4);
    CHECK(parts[0]["text"] == prompt.stage1_text);
    CHECK(parts[1]["text"] == prompt.metadata_block);
    CHECK(parts[2]["inline_data"]["mime_type"] == "application/zip");
    CHECK(parts[3]["text"] == prompt.stage2_text);
  }

  SUBCASE("rate limiting retries then succeeds") {
    FakeVendorServer server({429, 429, 200});
    RemoteBackend backend(remote_spec(server.endpoint()),
                          std::make_unique<GenerateContentAdapter>(server.endpoint(), ""));
    const RawResponse r = backend.run(prompt, task);
    CHECK(r.attempt_count == 3);
    CHECK(server.calls() == 3);
  }

  SUBCASE("persistent 429 exhausts the retry budget") {
    FakeVendorServer server({429});
    RemoteBackend backend(remote_spec(server.endpoint()),
                          std::make_unique<GenerateContentAdapter>(server.endpoint(), ""));
    try {
      backend.run(prompt, task);
      FAIL("expected RateLimitExhausted");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kRateLimitExhausted);
      CHECK(e.message().find("5 attempts") != std::string::npos);
    }
    CHECK(server.calls() == 5);
  }

  SUBCASE("model-content errors are never retried") {
    FakeVendorServer server({400});
    RemoteBackend backend(remote_spec(server.endpoint()),
                          std::make_unique<GenerateContentAdapter>(server.endpoint(), ""));
    try {
      backend.run(prompt, task);
      FAIL("expected VendorRejection");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kVendorRejection);
    }
    CHECK(server.calls() == 1);
  }

  SUBCASE("server errors are retried as transport failures") {
    FakeVendorServer server({503, 200});
    RemoteBackend backend(remote_spec(server.endpoint()),
                          std::make_unique<GenerateContentAdapter>(server.endpoint(), ""));
    CHECK(backend.run(prompt, task).attempt_count == 2);
  }

  SUBCASE("unreachable endpoint is a TransportFailure") {
    PredictorSpec spec = remote_spec("http://127.0.0.1:1/v1/models/generate");
    spec.retry.max_attempts = 2;
    RemoteBackend backend(spec, std::make_unique<GenerateContentAdapter>(spec.endpoint, ""));
    try {
      backend.run(prompt, task);
      FAIL("expected TransportFailure");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kTransportFailure);
    }
  }
}

TEST_CASE("warmed cache makes a run network-free") {
  TempDir dir("offline");
  const PromptPackage prompt = make_prompt(dir.path());
  InferenceTask task;

  std::string endpoint;
  {
    FakeVendorServer server({200});
    endpoint = server.endpoint();
    PredictorSpec spec = remote_spec(endpoint);
    ResponseCache cache(dir.path() / "cache");
    auto backend = std::make_unique<RemoteBackend>(
        spec, std::make_unique<GenerateContentAdapter>(endpoint, ""));
    Predictor predictor(spec, &cache, std::move(backend));
    for (int r = 0; r < 5; ++r) predictor.predict(prompt, task, r);
    CHECK(server.calls() == 5);
  }

  // Server is gone; offline mode must still answer every repeat from cache.
  PredictorSpec spec = remote_spec(endpoint);
  spec.offline = true;
  ResponseCache cache(dir.path() / "cache");
  auto backend = std::make_unique<RemoteBackend>(
      spec, std::make_unique<GenerateContentAdapter>(endpoint, ""));
  RemoteBackend* backend_ptr = backend.get();
  Predictor predictor(spec, &cache, std::move(backend));
  for (int r = 0; r < 5; ++r) {
    CHECK(predictor.predict(prompt, task, r).text == R"({"intention": "cross"})");
  }
  CHECK(backend_ptr->attempts_made() == 0);
  CHECK(predictor.cache_hits() == 5);

  // A cold key in offline mode refuses to touch the network.
  try {
    predictor.predict(prompt, task, 7);
    FAIL("expected TransportFailure");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kTransportFailure);
    CHECK(e.message().find("offline") != std::string::npos);
  }
  CHECK(backend_ptr->attempts_made() == 0);
}

TEST_CASE("BFPIP_API_URL supplies the endpoint when the config leaves it empty") {
  TempDir dir("env");
  const PromptPackage prompt = make_prompt(dir.path());
  InferenceTask task;

  FakeVendorServer server({200});
  ::setenv("BFPIP_API_URL", server.endpoint().c_str(), 1);
  PredictorSpec spec;
  spec.kind = BackendKind::kRemote;
  spec.model_id = "env-model";
  spec.retry.base_backoff_ms = 1;
  const auto predictor = Predictor::create(spec, nullptr);
  CHECK(predictor->predict(prompt, task, 0).text == R"({"intention": "cross"})");
  ::unsetenv("BFPIP_API_URL");

  // Without either source the remote backend cannot be constructed.
  try {
    Predictor::create(spec, nullptr);
    FAIL("expected InvalidValue");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kInvalidValue);
  }
}

TEST_CASE("a full evaluation run against a warmed cache performs zero network operations") {
  test::Workspace ws({test::make_instance("net_a", "vid_a", 90, Label::kCross, 2.0, 1.5),
                      test::make_instance("net_b", "vid_b", 96, Label::kNotCross, 50.0, 0.0)});
  const auto instances = filter_split(ws.manifest, Split::kTest);
  const TemplateSet templates = test::load_canonical_templates();
  ClipStore clips = ws.make_clip_store();
  ResponseCache cache(ws.cache_dir);
  const ModalityConfig config{false, false, true};

  std::string first_records;
  {
    FakeVendorServer server({200});
    PredictorSpec spec = remote_spec(server.endpoint());
    auto backend = std::make_unique<RemoteBackend>(
        spec, std::make_unique<GenerateContentAdapter>(server.endpoint(), ""));
    Predictor predictor(spec, &cache, std::move(backend));
    RunContext ctx{&clips, &templates, &predictor, {}};
    for (const PredictionRecord& r : evaluate_config(ctx, instances, config, 2)) {
      first_records += record_to_jsonl(r) + "\n";
    }
    CHECK(server.calls() == 2 * 5);
  }

  // Rerun with the server gone and the network disabled: identical records,
  // zero attempts.
  PredictorSpec spec = remote_spec("http://127.0.0.1:1/unreachable");
  spec.offline = true;
  auto backend = std::make_unique<RemoteBackend>(
      spec, std::make_unique<GenerateContentAdapter>(spec.endpoint, ""));
  RemoteBackend* backend_ptr = backend.get();
  Predictor predictor(spec, &cache, std::move(backend));
  RunContext ctx{&clips, &templates, &predictor, {}};
  std::string second_records;
  for (const PredictionRecord& r : evaluate_config(ctx, instances, config, 2)) {
    second_records += record_to_jsonl(r) + "\n";
  }
  CHECK(backend_ptr->attempts_made() == 0);
  CHECK(predictor.cache_hits() == 2 * 5);
  CHECK(second_records == first_records);
}
