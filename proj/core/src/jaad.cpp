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

#include "bfpip/jaad.hpp"

#include <algorithm>
#include <fstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "bfpip/error.hpp"
#include "bfpip/fs.hpp"

namespace bfpip {

namespace fs = std::filesystem;
using boost::property_tree::ptree;

SplitSpec SplitSpec::load(const fs::path& path) {
  const auto doc = nlohmann::json::parse(read_file(path), nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw Error(ErrorKind::kSchemaViolation, "split spec must be a JSON object");
  }
  SplitSpec spec;
  for (const auto& [key, value] : doc.items()) {
    const auto split = split_from_string(key);
    if (!split || !value.is_array()) {
      throw Error(ErrorKind::kSchemaViolation,
                  "split spec keys must be train|val|test with video id arrays, got: " + key);
    }
    for (const auto& vid : value) {
      if (!vid.is_string()) {
        throw Error(ErrorKind::kSchemaViolation, "split spec video ids must be strings");
      }
      spec.video_split[vid.get<std::string>()] = *split;
    }
  }
  return spec;
}

namespace {

// JAAD's native vehicle actions plus common spellings of the constant-speed
// trend; the manifest vocabulary is the six-tag set in dataset.hpp.
std::optional<EgoSpeed> ego_speed_from_jaad(std::string action) {
  std::replace(action.begin(), action.end(), '-', '_');
  if (action == "stopped") return EgoSpeed::kStopped;
  if (action == "decelerating" || action == "slowing_down") return EgoSpeed::kDecelerating;
  if (action == "accelerating" || action == "speeding_up") return EgoSpeed::kAccelerating;
  if (action == "moving_slow") return EgoSpeed::kMovingSlow;
  if (action == "moving_fast") return EgoSpeed::kMovingFast;
  if (action == "constant" || action == "constant_speed" || action == "maintaining") {
    return EgoSpeed::kConstant;
  }
  return std::nullopt;
}

ptree read_xml_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kFileNotFound, "cannot open " + path.string());
  ptree tree;
  try {
    boost::property_tree::read_xml(in, tree);
  } catch (const boost::property_tree::xml_parser_error& e) {
    throw Error(ErrorKind::kSchemaViolation,
                fmt::format("{}: malformed XML: {}", path.string(), e.what()));
  }
  return tree;
}

std::map<int, EgoSpeed> load_vehicle_track(const fs::path& vehicle_file,
                                           const std::string& video_id) {
  if (!fs::exists(vehicle_file)) {
    throw Error(ErrorKind::kMissingAnnotationField,
                fmt::format("ego_speed (no vehicle annotation for {})", video_id));
  }
  const ptree tree = read_xml_file(vehicle_file);
  const auto root = tree.get_child_optional("vehicle_info");
  if (!root) {
    throw Error(ErrorKind::kMissingAnnotationField,
                fmt::format("ego_speed (empty vehicle annotation for {})", video_id));
  }
  std::map<int, EgoSpeed> track;
  for (const auto& [name, node] : *root) {
    if (name != "frame") continue;
    const auto id = node.get_optional<int>("<xmlattr>.id");
    const auto action = node.get_optional<std::string>("<xmlattr>.action");
    if (!id || !action) {
      throw Error(ErrorKind::kMissingAnnotationField,
                  fmt::format("vehicle frame id/action ({})", video_id));
    }
    const auto speed = ego_speed_from_jaad(*action);
    if (!speed) {
      throw Error(ErrorKind::kInvalidValue,
                  fmt::format("unknown ego-speed action '{}' in {}", *action, video_id));
    }
    track[*id] = *speed;
  }
  if (track.empty()) {
    throw Error(ErrorKind::kMissingAnnotationField,
                fmt::format("ego_speed (no frames in vehicle annotation for {})", video_id));
  }
  return track;
}

struct TrackBox {
  int frame = 0;
  BoundingBox box;
  bool crossing = false;
  std::string ped_id;
};

}  // namespace

JaadAdaptResult adapt_jaad(const fs::path& annotation_dir, const SplitSpec& splits) {
  fs::path ann_root = annotation_dir / "annotations";
  if (!fs::is_directory(ann_root)) ann_root = annotation_dir;
  if (!fs::is_directory(ann_root)) {
    throw Error(ErrorKind::kFileNotFound, "annotation directory not found: " + ann_root.string());
  }
  const fs::path vehicle_root = annotation_dir / "annotations_vehicle";

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(ann_root)) {
    if (entry.is_regular_file() && entry.path().extension() == ".xml") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());

  JaadAdaptResult result;
  result.manifest.fps = kDatasetFps;
  result.manifest.source = "jaad:" + annotation_dir.string();

  for (const fs::path& file : files) {
    const std::string video_id = file.stem().string();
    const auto split_it = splits.video_split.find(video_id);
    if (split_it == splits.video_split.end()) {
      throw Error(ErrorKind::kUnknownSplitVideo, video_id);
    }
    const Split split = split_it->second;

    const ptree tree = read_xml_file(file);
    const auto root = tree.get_child_optional("annotations");
    if (!root) {
      throw Error(ErrorKind::kSchemaViolation, file.string() + ": missing <annotations> root");
    }

    std::optional<std::pair<int, int>> frame_dims;
    if (const auto w = root->get_optional<int>("meta.task.original_size.width")) {
      if (const auto h = root->get_optional<int>("meta.task.original_size.height")) {
        frame_dims = {*w, *h};
      }
    }

    fs::path vehicle_file = vehicle_root / (video_id + "_vehicle.xml");
    if (!fs::exists(vehicle_file)) {
      // Flat layouts keep the vehicle file beside the annotation file.
      vehicle_file = file.parent_path() / (video_id + "_vehicle.xml");
    }
    const std::map<int, EgoSpeed> ego_track = load_vehicle_track(vehicle_file, video_id);

    int anonymous_track = 0;
    for (const auto& [name, track_node] : *root) {
      if (name != "track") continue;
      const auto label = track_node.get_optional<std::string>("<xmlattr>.label");
      if (!label || *label != "pedestrian") continue;

      std::vector<TrackBox> boxes;
      for (const auto& [bname, box_node] : track_node) {
        if (bname != "box") continue;
        TrackBox tb;
        const auto frame = box_node.get_optional<int>("<xmlattr>.frame");
        const auto xtl = box_node.get_optional<double>("<xmlattr>.xtl");
        const auto ytl = box_node.get_optional<double>("<xmlattr>.ytl");
        const auto xbr = box_node.get_optional<double>("<xmlattr>.xbr");
        const auto ybr = box_node.get_optional<double>("<xmlattr>.ybr");
        if (!frame) throw Error(ErrorKind::kMissingAnnotationField, "box.frame");
        if (!xtl || !ytl || !xbr || !ybr) {
          throw Error(ErrorKind::kMissingAnnotationField,
                      fmt::format("box coordinates (frame {} of {})", *frame, video_id));
        }
        tb.frame = *frame;
        tb.box = BoundingBox{*xtl, *ytl, *xbr - *xtl, *ybr - *ytl};
        for (const auto& [aname, attr_node] : box_node) {
          if (aname != "attribute") continue;
          const auto attr = attr_node.get_optional<std::string>("<xmlattr>.name");
          if (!attr) continue;
          const std::string value = attr_node.get_value<std::string>();
          if (*attr == "id") {
            tb.ped_id = value;
          } else if (*attr == "cross") {
            tb.crossing = (value == "crossing");
          }
        }
        boxes.push_back(std::move(tb));
      }
      if (boxes.empty()) continue;
      std::sort(boxes.begin(), boxes.end(),
                [](const TrackBox& a, const TrackBox& b) { return a.frame < b.frame; });

      PedestrianInstance inst;
      inst.video_id = video_id;
      inst.split = split;
      inst.frame_dims = frame_dims;
      inst.instance_id = boxes.front().ped_id.empty()
                             ? fmt::format("{}_ped{}", video_id, anonymous_track)
                             : boxes.front().ped_id;
      ++anonymous_track;

      const auto first_crossing =
          std::find_if(boxes.begin(), boxes.end(), [](const TrackBox& b) { return b.crossing; });
      if (first_crossing != boxes.end()) {
        inst.event_frame = first_crossing->frame;
        inst.ground_truth = Label::kCross;
      } else {
        inst.event_frame = boxes.back().frame;
        inst.ground_truth = Label::kNotCross;
      }

      if (inst.event_frame < kMinEventFrame) {
        result.excluded.push_back(
            fmt::format("{}: insufficient history (event_frame {} < {})", inst.instance_id,
                        inst.event_frame, kMinEventFrame));
        continue;
      }

      int prev = -1;
      for (const TrackBox& tb : boxes) {
        if (tb.frame == prev) continue;  // duplicate frame rows: keep the first
        prev = tb.frame;
        FrameAnnotation fa;
        fa.frame_index = tb.frame;
        // Clamp to the frame so annotation noise (boxes nudged past the image
        // border) cannot produce an invalid manifest; degenerate boxes are
        // dropped rather than emitted.
        BoundingBox box = tb.box;
        if (box.x < 0) { box.w += box.x; box.x = 0; }
        if (box.y < 0) { box.h += box.y; box.y = 0; }
        if (frame_dims) {
          box.w = std::min(box.w, frame_dims->first - box.x);
          box.h = std::min(box.h, frame_dims->second - box.y);
        }
        if (box.w > 0 && box.h > 0) fa.bbox = box;
        if (const auto it = ego_track.find(tb.frame); it != ego_track.end()) {
          fa.ego_speed = it->second;
        }
        inst.frames.push_back(std::move(fa));
      }
      result.manifest.instances.push_back(std::move(inst));
    }
  }

  if (result.manifest.instances.empty()) {
    throw Error(ErrorKind::kNoEvaluableInstances,
                "no instances with enough history in " + annotation_dir.string());
  }
  return result;
}

}  // namespace bfpip
