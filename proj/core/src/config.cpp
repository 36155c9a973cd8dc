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

#include "bfpip/config.hpp"

#include <set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "bfpip/digest.hpp"
#include "bfpip/error.hpp"
#include "bfpip/fs.hpp"

namespace bfpip {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::string& prefix,
                const std::set<std::string>& allowed) {
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.contains(key)) {
      throw Error(ErrorKind::kUnknownKey, prefix.empty() ? key : prefix + "." + key);
    }
  }
}

template <typename T>
T get_or(const json& obj, const std::string& key, const std::string& prefix, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorKind::kInvalidValue,
                fmt::format("{}.{}: wrong type", prefix, key));
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return {};
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

// Applies one "a.b.c=value" override onto the JSON document. The value is
// parsed as JSON when possible so numbers and booleans keep their type;
// anything unparseable is taken as a string.
void apply_override(json& doc, const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw Error(ErrorKind::kInvalidValue, "override must look like key.path=value: " + spec);
  }
  const std::string path = spec.substr(0, eq);
  const std::string value_text = spec.substr(eq + 1);
  json value = json::parse(value_text, nullptr, false);
  if (value.is_discarded()) value = value_text;

  json* node = &doc;
  size_t start = 0;
  while (true) {
    const size_t dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? dot : dot - start);
    if (key.empty()) {
      throw Error(ErrorKind::kInvalidValue, "override has an empty path segment: " + spec);
    }
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    if (!node->contains(key)) (*node)[key] = json::object();
    node = &(*node)[key];
    if (!node->is_object()) {
      throw Error(ErrorKind::kInvalidValue,
                  fmt::format("override path {} crosses a non-object value", path));
    }
    start = dot + 1;
  }
}

void require_exists(const fs::path& path, const std::string& what) {
  if (!path.empty() && !fs::exists(path)) {
    throw Error(ErrorKind::kMissingFile, fmt::format("{}: {}", what, path.string()));
  }
}

}  // namespace

HarnessConfig load_config_text(const std::string& json_text, const fs::path& base_dir,
                               const std::vector<std::string>& overrides) {
  json doc = json::parse(json_text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw Error(ErrorKind::kInvalidValue, "config must be a JSON object");
  }
  for (const std::string& spec : overrides) {
    apply_override(doc, spec);
  }

  check_keys(doc, "",
             {"dataset", "media", "backend", "protocol", "templates", "cache_dir", "runs_dir",
              "clips_dir", "max_concurrency", "configs", "allow_protocol_deviations"});

  HarnessConfig cfg;
  cfg.base_dir = base_dir;

  const json dataset = doc.value("dataset", json::object());
  check_keys(dataset, "dataset", {"manifest", "frames_root", "videos_root", "video_ext"});
  cfg.manifest_path = resolve(base_dir, get_or<std::string>(dataset, "manifest", "dataset", ""));
  cfg.frames_root = resolve(base_dir, get_or<std::string>(dataset, "frames_root", "dataset", ""));
  cfg.videos_root = resolve(base_dir, get_or<std::string>(dataset, "videos_root", "dataset", ""));
  cfg.video_ext = get_or<std::string>(dataset, "video_ext", "dataset", ".mp4");

  const json media = doc.value("media", json::object());
  check_keys(media, "media",
             {"decode_cmd", "encode_cmd", "container", "overlay_stroke", "overlay_color_bgr"});
  cfg.decode_cmd = get_or<std::string>(media, "decode_cmd", "media", "");
  cfg.encode_cmd = get_or<std::string>(media, "encode_cmd", "media", "");
  const std::string container = get_or<std::string>(media, "container", "media", "frameseq");
  if (container == "frameseq") {
    cfg.container = ClipContainer::kFrameSequenceZip;
  } else if (container == "video") {
    cfg.container = ClipContainer::kVideo;
  } else {
    throw Error(ErrorKind::kInvalidValue, "media.container: must be frameseq or video");
  }
  cfg.overlay.stroke = get_or<int>(media, "overlay_stroke", "media", 3);
  if (cfg.overlay.stroke <= 0) {
    throw Error(ErrorKind::kInvalidValue, "media.overlay_stroke: must be positive");
  }
  if (media.contains("overlay_color_bgr")) {
    const json& color = media["overlay_color_bgr"];
    if (!color.is_array() || color.size() != 3) {
      throw Error(ErrorKind::kInvalidValue, "media.overlay_color_bgr: must be [b, g, r]");
    }
    for (int i = 0; i < 3; ++i) {
      const int c = color[i].get<int>();
      if (c < 0 || c > 255) {
        throw Error(ErrorKind::kInvalidValue, "media.overlay_color_bgr: channels are 0..255");
      }
      cfg.overlay.color_bgr[static_cast<size_t>(i)] = static_cast<std::uint8_t>(c);
    }
  }

  const json backend = doc.value("backend", json::object());
  check_keys(backend, "backend",
             {"kind", "model_id", "temperature", "seed", "endpoint", "timeout_s",
              "max_attempts", "backoff_ms", "offline", "script_path",
              "heuristic_threshold_px"});
  const std::string kind = get_or<std::string>(backend, "kind", "backend", "scripted");
  const auto backend_kind = backend_kind_from_string(kind);
  if (!backend_kind) {
    throw Error(ErrorKind::kInvalidValue, "backend.kind: must be remote|scripted|heuristic");
  }
  cfg.backend.kind = *backend_kind;
  cfg.backend.model_id = get_or<std::string>(backend, "model_id", "backend", "offline");
  cfg.backend.temperature = get_or<double>(backend, "temperature", "backend", 0.0);
  cfg.backend.seed = get_or<long long>(backend, "seed", "backend", 0);
  cfg.backend.endpoint = get_or<std::string>(backend, "endpoint", "backend", "");
  cfg.backend.timeout_s = get_or<double>(backend, "timeout_s", "backend", 120.0);
  cfg.backend.retry.max_attempts = get_or<int>(backend, "max_attempts", "backend", 5);
  cfg.backend.retry.base_backoff_ms = get_or<int>(backend, "backoff_ms", "backend", 1000);
  cfg.backend.offline = get_or<bool>(backend, "offline", "backend", false);
  cfg.backend.script_path =
      resolve(base_dir, get_or<std::string>(backend, "script_path", "backend", ""));
  cfg.backend.heuristic_threshold_px =
      get_or<double>(backend, "heuristic_threshold_px", "backend", 20.0);
  if (cfg.backend.retry.max_attempts < 1) {
    throw Error(ErrorKind::kInvalidValue, "backend.max_attempts: must be >= 1");
  }

  const json protocol = doc.value("protocol", json::object());
  check_keys(protocol, "protocol", {"repeats", "parse_mode", "tie_break"});
  cfg.protocol.repeats = get_or<int>(protocol, "repeats", "protocol", 5);
  if (cfg.protocol.repeats < 1) {
    throw Error(ErrorKind::kInvalidValue, "protocol.repeats: must be >= 1");
  }
  const std::string parse_mode =
      get_or<std::string>(protocol, "parse_mode", "protocol", "strict");
  const auto mode = parse_mode_from_string(parse_mode);
  if (!mode) {
    throw Error(ErrorKind::kInvalidValue, "protocol.parse_mode: must be strict or salvage");
  }
  cfg.protocol.parse_mode = *mode;
  const std::string tie = get_or<std::string>(protocol, "tie_break", "protocol", "not_cross");
  const auto tie_break = tie_break_from_string(tie);
  if (!tie_break) {
    throw Error(ErrorKind::kInvalidValue, "protocol.tie_break: must be cross or not_cross");
  }
  cfg.protocol.tie_break = *tie_break;

  const json templates = doc.value("templates", json::object());
  check_keys(templates, "templates", {"stage1", "stage2"});
  cfg.stage1_template =
      resolve(base_dir, get_or<std::string>(templates, "stage1", "templates",
                                            "templates/stage1.txt"));
  cfg.stage2_template =
      resolve(base_dir, get_or<std::string>(templates, "stage2", "templates",
                                            "templates/stage2.txt"));

  cfg.cache_dir = resolve(base_dir, get_or<std::string>(doc, "cache_dir", "", "cache"));
  cfg.runs_dir = resolve(base_dir, get_or<std::string>(doc, "runs_dir", "", "runs"));
  cfg.clips_dir = resolve(base_dir, get_or<std::string>(doc, "clips_dir", "", "clips"));
  cfg.max_concurrency = get_or<int>(doc, "max_concurrency", "", 4);
  if (cfg.max_concurrency < 1) {
    throw Error(ErrorKind::kInvalidValue, "max_concurrency: must be >= 1");
  }
  cfg.allow_protocol_deviations = get_or<bool>(doc, "allow_protocol_deviations", "", false);

  if (doc.contains("configs")) {
    if (!doc["configs"].is_array()) {
      throw Error(ErrorKind::kInvalidValue, "configs: must be an array of modality labels");
    }
    for (const json& entry : doc["configs"]) {
      const auto config = entry.is_string()
                              ? ModalityConfig::from_label(entry.get<std::string>())
                              : std::nullopt;
      if (!config) {
        throw Error(ErrorKind::kInvalidValue,
                    "configs: unknown modality label " + entry.dump());
      }
      cfg.configs.push_back(*config);
    }
  }

  // Protocol-conformant runs pin temperature 0 / seed 0; other values need
  // the explicit opt-in and are stamped as deviations either way.
  if ((cfg.backend.temperature != 0.0 || cfg.backend.seed != 0) &&
      !cfg.allow_protocol_deviations) {
    throw Error(ErrorKind::kInvalidValue,
                "backend.temperature/seed must be 0 unless allow_protocol_deviations is set");
  }
  if (cfg.backend.temperature != 0.0) {
    cfg.deviations.push_back(
        fmt::format("backend.temperature={} (protocol default 0)", cfg.backend.temperature));
  }
  if (cfg.backend.seed != 0) {
    cfg.deviations.push_back(
        fmt::format("backend.seed={} (protocol default 0)", cfg.backend.seed));
  }
  if (cfg.protocol.repeats != 5) {
    cfg.deviations.push_back(
        fmt::format("protocol.repeats={} (protocol default 5)", cfg.protocol.repeats));
  }

  // Paths that are explicitly configured must resolve now; defaults are
  // checked where they are first used.
  require_exists(cfg.manifest_path, "dataset.manifest");
  require_exists(cfg.backend.script_path, "backend.script_path");
  if (templates.contains("stage1")) require_exists(cfg.stage1_template, "templates.stage1");
  if (templates.contains("stage2")) require_exists(cfg.stage2_template, "templates.stage2");
  if (dataset.contains("frames_root")) require_exists(cfg.frames_root, "dataset.frames_root");
  if (dataset.contains("videos_root")) require_exists(cfg.videos_root, "dataset.videos_root");

  return cfg;
}

HarnessConfig load_config(const fs::path& path, const std::vector<std::string>& overrides) {
  if (!fs::exists(path)) {
    throw Error(ErrorKind::kMissingFile, path.string());
  }
  return load_config_text(read_file(path), path.parent_path(), overrides);
}

std::string config_digest(const HarnessConfig& config) {
  std::vector<std::string> fields = {
      std::string(to_string(config.backend.kind)),
      config.backend.model_id,
      fmt::format("{}", config.backend.temperature),
      std::to_string(config.backend.seed),
      std::to_string(config.protocol.repeats),
      std::string(to_string(config.protocol.parse_mode)),
      std::string(to_string(config.protocol.tie_break)),
      config.manifest_path.string(),
      config.backend.script_path.string(),
  };
  for (const ModalityConfig& c :
       config.configs.empty()
           ? std::vector<ModalityConfig>(ModalityConfig::all().begin(),
                                         ModalityConfig::all().end())
           : config.configs) {
    fields.push_back(c.label());
  }
  return sha256_fields(fields);
}

}  // namespace bfpip
