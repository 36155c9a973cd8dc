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

#include "bfpip/dataset.hpp"

#include <algorithm>
#include <set>
#include <unordered_set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "bfpip/error.hpp"
#include "bfpip/fs.hpp"

namespace bfpip {

using nlohmann::json;

std::string_view to_string(EgoSpeed tag) {
  switch (tag) {
    case EgoSpeed::kStopped: return "stopped";
    case EgoSpeed::kDecelerating: return "decelerating";
    case EgoSpeed::kConstant: return "constant";
    case EgoSpeed::kAccelerating: return "accelerating";
    case EgoSpeed::kMovingSlow: return "moving-slow";
    case EgoSpeed::kMovingFast: return "moving-fast";
  }
  return "constant";
}

std::optional<EgoSpeed> ego_speed_from_string(std::string_view s) {
  if (s == "stopped") return EgoSpeed::kStopped;
  if (s == "decelerating") return EgoSpeed::kDecelerating;
  if (s == "constant") return EgoSpeed::kConstant;
  if (s == "accelerating") return EgoSpeed::kAccelerating;
  if (s == "moving-slow") return EgoSpeed::kMovingSlow;
  if (s == "moving-fast") return EgoSpeed::kMovingFast;
  return std::nullopt;
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "test";
}

std::optional<Split> split_from_string(std::string_view s) {
  if (s == "train") return Split::kTrain;
  if (s == "val") return Split::kVal;
  if (s == "test") return Split::kTest;
  return std::nullopt;
}

const FrameAnnotation* PedestrianInstance::frame(int frame_index) const {
  const auto it = std::lower_bound(
      frames.begin(), frames.end(), frame_index,
      [](const FrameAnnotation& f, int idx) { return f.frame_index < idx; });
  if (it == frames.end() || it->frame_index != frame_index) return nullptr;
  return &*it;
}

namespace {

// Collects every violated invariant so a rejected manifest names all of its
// problems at once instead of one per run.
class Violations {
 public:
  template <typename... Args>
  void add(fmt::format_string<Args...> f, Args&&... args) {
    items_.push_back(fmt::format(f, std::forward<Args>(args)...));
  }

  void raise_if_any() const {
    if (!items_.empty()) {
      throw Error(ErrorKind::kSchemaViolation,
                  fmt::format("{} invariant violation(s)", items_.size()), items_);
    }
  }

 private:
  std::vector<std::string> items_;
};

void require_keys(const json& obj, const std::string& where,
                  const std::set<std::string>& allowed,
                  const std::set<std::string>& required, Violations& v) {
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.contains(key)) v.add("{}.{}: unknown key", where, key);
  }
  for (const auto& key : required) {
    if (!obj.contains(key)) v.add("{}.{}: missing required key", where, key);
  }
}

std::optional<BoundingBox> parse_bbox(const json& node, const std::string& where,
                                      const std::optional<std::pair<int, int>>& dims,
                                      Violations& v) {
  if (node.is_null()) return std::nullopt;
  if (!node.is_object()) {
    v.add("{}: must be an object or null", where);
    return std::nullopt;
  }
  require_keys(node, where, {"x", "y", "w", "h"}, {"x", "y", "w", "h"}, v);
  BoundingBox box;
  bool ok = true;
  for (const auto& [field, target] : std::initializer_list<std::pair<const char*, double*>>{
           {"x", &box.x}, {"y", &box.y}, {"w", &box.w}, {"h", &box.h}}) {
    if (!node.contains(field)) { ok = false; continue; }
    if (!node[field].is_number()) {
      v.add("{}.{}: must be a number", where, field);
      ok = false;
      continue;
    }
    *target = node[field].get<double>();
  }
  if (!ok) return std::nullopt;
  if (box.w <= 0) v.add("{}.w: must be positive", where);
  if (box.h <= 0) v.add("{}.h: must be positive", where);
  if (box.x < 0) v.add("{}.x: must be non-negative", where);
  if (box.y < 0) v.add("{}.y: must be non-negative", where);
  if (dims) {
    if (box.x + box.w > dims->first) {
      v.add("{}: x+w exceeds frame width {}", where, dims->first);
    }
    if (box.y + box.h > dims->second) {
      v.add("{}: y+h exceeds frame height {}", where, dims->second);
    }
  }
  return box;
}

PedestrianInstance parse_instance(const json& node, const std::string& where, Violations& v) {
  PedestrianInstance inst;
  require_keys(node, where,
               {"instance_id", "video_id", "split", "event_frame", "ground_truth",
                "frame_dims", "frames"},
               {"instance_id", "video_id", "split", "event_frame", "ground_truth",
                "frame_dims", "frames"},
               v);

  if (node.contains("instance_id") && node["instance_id"].is_string()) {
    inst.instance_id = node["instance_id"].get<std::string>();
    if (inst.instance_id.empty()) v.add("{}.instance_id: must be non-empty", where);
  } else if (node.contains("instance_id")) {
    v.add("{}.instance_id: must be a string", where);
  }

  if (node.contains("video_id") && node["video_id"].is_string()) {
    inst.video_id = node["video_id"].get<std::string>();
    if (inst.video_id.empty()) v.add("{}.video_id: must be non-empty", where);
  } else if (node.contains("video_id")) {
    v.add("{}.video_id: must be a string", where);
  }

  if (node.contains("split")) {
    const auto split = node["split"].is_string()
                           ? split_from_string(node["split"].get<std::string>())
                           : std::nullopt;
    if (!split) {
      v.add("{}.split: must be one of train|val|test", where);
    } else {
      inst.split = *split;
    }
  }

  if (node.contains("event_frame")) {
    if (!node["event_frame"].is_number_integer()) {
      v.add("{}.event_frame: must be an integer", where);
    } else {
      inst.event_frame = node["event_frame"].get<int>();
      if (inst.event_frame < kMinEventFrame) {
        v.add("{}.event_frame: must be >= {} (observation window needs {} frames "
              "ending {} before the event)",
              where, kMinEventFrame, kWindowFrames, kTteFrames);
      }
    }
  }

  if (node.contains("ground_truth")) {
    const json& gt = node["ground_truth"];
    if (gt.is_null()) {
      if (inst.split == Split::kTest) {
        v.add("{}.ground_truth: required for test-split instances", where);
      }
    } else if (gt.is_string() && label_from_string(gt.get<std::string>())) {
      inst.ground_truth = label_from_string(gt.get<std::string>());
    } else {
      v.add("{}.ground_truth: must be \"cross\", \"not_cross\", or null", where);
    }
  }

  if (node.contains("frame_dims")) {
    const json& fd = node["frame_dims"];
    if (fd.is_array() && fd.size() == 2 && fd[0].is_number_integer() &&
        fd[1].is_number_integer()) {
      inst.frame_dims = {fd[0].get<int>(), fd[1].get<int>()};
      if (inst.frame_dims->first <= 0 || inst.frame_dims->second <= 0) {
        v.add("{}.frame_dims: dimensions must be positive", where);
      }
    } else if (!fd.is_null()) {
      v.add("{}.frame_dims: must be [width, height] or null", where);
    }
  }

  if (node.contains("frames")) {
    if (!node["frames"].is_array()) {
      v.add("{}.frames: must be an array", where);
    } else {
      int prev_index = -1;
      size_t i = 0;
      for (const json& fnode : node["frames"]) {
        const std::string fwhere = fmt::format("{}.frames[{}]", where, i);
        if (!fnode.is_object()) {
          v.add("{}: must be an object", fwhere);
          ++i;
          continue;
        }
        require_keys(fnode, fwhere, {"frame_index", "bbox", "ego_speed"},
                     {"frame_index", "bbox", "ego_speed"}, v);
        FrameAnnotation fa;
        if (fnode.contains("frame_index") && fnode["frame_index"].is_number_integer()) {
          fa.frame_index = fnode["frame_index"].get<int>();
          if (fa.frame_index < 0) v.add("{}.frame_index: must be non-negative", fwhere);
          if (fa.frame_index <= prev_index) {
            v.add("{}.frame_index: must be strictly ascending (got {} after {})",
                  fwhere, fa.frame_index, prev_index);
          }
          prev_index = fa.frame_index;
        } else {
          v.add("{}.frame_index: must be an integer", fwhere);
        }
        if (fnode.contains("bbox")) {
          fa.bbox = parse_bbox(fnode["bbox"], fwhere + ".bbox", inst.frame_dims, v);
        }
        if (fnode.contains("ego_speed")) {
          const json& es = fnode["ego_speed"];
          if (es.is_string() && ego_speed_from_string(es.get<std::string>())) {
            fa.ego_speed = ego_speed_from_string(es.get<std::string>());
          } else if (!es.is_null()) {
            v.add("{}.ego_speed: unknown tag", fwhere);
          }
        }
        inst.frames.push_back(std::move(fa));
        ++i;
      }
    }
  }

  return inst;
}

}  // namespace

DatasetManifest parse_manifest_text(const std::string& json_text) {
  const json doc = json::parse(json_text, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) {
    throw Error(ErrorKind::kSchemaViolation, "manifest is not valid JSON");
  }

  Violations v;
  if (!doc.is_object()) {
    v.add("manifest: top level must be an object");
    v.raise_if_any();
  }
  require_keys(doc, "manifest", {"fps", "source", "instances"},
               {"fps", "source", "instances"}, v);

  DatasetManifest manifest;
  if (doc.contains("fps")) {
    if (!doc["fps"].is_number_integer() || doc["fps"].get<int>() != kDatasetFps) {
      v.add("manifest.fps: must be {}", kDatasetFps);
    } else {
      manifest.fps = doc["fps"].get<int>();
    }
  }
  if (doc.contains("source")) {
    if (!doc["source"].is_string()) {
      v.add("manifest.source: must be a string");
    } else {
      manifest.source = doc["source"].get<std::string>();
    }
  }
  if (doc.contains("instances")) {
    if (!doc["instances"].is_array()) {
      v.add("manifest.instances: must be an array");
    } else {
      size_t i = 0;
      for (const json& node : doc["instances"]) {
        const std::string where = fmt::format("instances[{}]", i);
        if (!node.is_object()) {
          v.add("{}: must be an object", where);
        } else {
          manifest.instances.push_back(parse_instance(node, where, v));
        }
        ++i;
      }
    }
  }
  v.raise_if_any();

  std::unordered_set<std::string> seen;
  for (const auto& inst : manifest.instances) {
    if (!seen.insert(inst.instance_id).second) {
      throw Error(ErrorKind::kDuplicateInstanceId, inst.instance_id);
    }
  }
  return manifest;
}

DatasetManifest parse_manifest(const std::filesystem::path& path) {
  return parse_manifest_text(read_file(path));
}

std::string serialize_manifest(const DatasetManifest& manifest) {
  json doc;
  doc["fps"] = manifest.fps;
  doc["source"] = manifest.source;
  json instances = json::array();
  for (const auto& inst : manifest.instances) {
    json node;
    node["instance_id"] = inst.instance_id;
    node["video_id"] = inst.video_id;
    node["split"] = to_string(inst.split);
    node["event_frame"] = inst.event_frame;
    node["ground_truth"] =
        inst.ground_truth ? json(std::string(to_string(*inst.ground_truth))) : json(nullptr);
    node["frame_dims"] = inst.frame_dims
                             ? json::array({inst.frame_dims->first, inst.frame_dims->second})
                             : json(nullptr);
    json frames = json::array();
    for (const auto& fa : inst.frames) {
      json fnode;
      fnode["frame_index"] = fa.frame_index;
      if (fa.bbox) {
        fnode["bbox"] = {{"x", fa.bbox->x}, {"y", fa.bbox->y},
                         {"w", fa.bbox->w}, {"h", fa.bbox->h}};
      } else {
        fnode["bbox"] = nullptr;
      }
      fnode["ego_speed"] =
          fa.ego_speed ? json(std::string(to_string(*fa.ego_speed))) : json(nullptr);
      frames.push_back(std::move(fnode));
    }
    node["frames"] = std::move(frames);
    instances.push_back(std::move(node));
  }
  doc["instances"] = std::move(instances);
  return doc.dump(2) + "\n";
}

void emit_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  atomic_write_file(path, serialize_manifest(manifest));
}

std::vector<PedestrianInstance> filter_split(const DatasetManifest& manifest, Split split) {
  std::vector<PedestrianInstance> out;
  for (const auto& inst : manifest.instances) {
    if (inst.split == split) out.push_back(inst);
  }
  std::sort(out.begin(), out.end(),
            [](const PedestrianInstance& a, const PedestrianInstance& b) {
              return a.instance_id < b.instance_id;
            });
  return out;
}

}  // namespace bfpip
