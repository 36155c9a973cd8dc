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

// Generates a small synthetic workspace (frame directories, manifest, config)
// so the full pipeline can be exercised offline with the heuristic backend:
//
//   bfpip-synth demo --templates templates
//   bfpip run --config demo/config.json --modality AV+S

#include <filesystem>
#include <iostream>
#include <random>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "bfpip/clipper.hpp"
#include "bfpip/dataset.hpp"
#include "bfpip/fs.hpp"

namespace fs = std::filesystem;
using bfpip::BoundingBox;
using bfpip::EgoSpeed;
using bfpip::FrameAnnotation;
using bfpip::Label;
using bfpip::PedestrianInstance;

namespace {

constexpr int kWidth = 320;
constexpr int kHeight = 240;

// A street-like scene: sky, road band, dashed centerline, pedestrian box.
void draw_frame(cv::Mat& image, const BoundingBox& ped) {
  image.setTo(cv::Scalar(180, 160, 140));
  cv::rectangle(image, cv::Rect(0, kHeight / 2, kWidth, kHeight / 2), cv::Scalar(60, 60, 60),
                cv::FILLED);
  for (int x = 0; x < kWidth; x += 40) {
    cv::rectangle(image, cv::Rect(x, kHeight * 3 / 4 - 2, 20, 4), cv::Scalar(200, 200, 200),
                  cv::FILLED);
  }
  cv::rectangle(image,
                cv::Rect(static_cast<int>(ped.x), static_cast<int>(ped.y),
                         static_cast<int>(ped.w), static_cast<int>(ped.h)),
                cv::Scalar(30, 140, 220), cv::FILLED);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"generate a synthetic offline demo workspace"};
  std::string out_dir;
  std::string templates_dir = "templates";
  int n_instances = 8;
  unsigned seed = 7;
  app.add_option("out_dir", out_dir, "workspace directory to create")->required();
  app.add_option("--templates", templates_dir, "prompt template directory to copy")
      ->capture_default_str();
  app.add_option("--instances", n_instances, "number of pedestrian instances")
      ->capture_default_str();
  app.add_option("--seed", seed, "deterministic generator seed")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  const fs::path root(out_dir);
  fs::create_directories(root);

  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> event_dist(60, 110);
  std::uniform_int_distribution<int> lateral_dist(-3, 3);

  bfpip::DatasetManifest manifest;
  manifest.source = "synthetic demo";

  const std::array<EgoSpeed, 3> speeds = {EgoSpeed::kMovingSlow, EgoSpeed::kDecelerating,
                                          EgoSpeed::kConstant};

  for (int i = 0; i < n_instances; ++i) {
    const std::string video_id = fmt::format("synth_{:04d}", i);
    const fs::path frame_dir = root / "frames" / video_id / "frames";
    fs::create_directories(frame_dir);

    PedestrianInstance inst;
    inst.instance_id = fmt::format("{}_ped0", video_id);
    inst.video_id = video_id;
    inst.split = bfpip::Split::kTest;
    inst.event_frame = event_dist(rng);
    inst.frame_dims = {kWidth, kHeight};
    // Even instances walk toward the road center (cross); odd ones drift away.
    const bool crossing = i % 2 == 0;
    inst.ground_truth = crossing ? Label::kCross : Label::kNotCross;

    const auto window = bfpip::compute_window(inst.event_frame);
    const double step = crossing ? 4.0 : -2.0;
    double x = crossing ? 30.0 : 120.0;
    cv::Mat image(kHeight, kWidth, CV_8UC3);
    for (int f = window.start_frame; f <= window.end_frame; ++f) {
      BoundingBox box{x, 120.0, 18.0, 48.0};
      draw_frame(image, box);
      cv::imwrite((frame_dir / bfpip::frame_file_name(f)).string(), image);

      FrameAnnotation fa;
      fa.frame_index = f;
      fa.bbox = box;
      fa.ego_speed = speeds[static_cast<size_t>(f) % speeds.size()];
      inst.frames.push_back(fa);

      x += step + lateral_dist(rng) * 0.25;
    }
    manifest.instances.push_back(std::move(inst));
  }

  bfpip::emit_manifest(manifest, root / "manifest.json");

  fs::create_directories(root / "templates");
  for (const char* name : {"stage1.txt", "stage2.txt"}) {
    const fs::path src = fs::path(templates_dir) / name;
    if (!fs::exists(src)) {
      std::cerr << "template not found: " << src << "\n";
      return 1;
    }
    fs::copy_file(src, root / "templates" / name, fs::copy_options::overwrite_existing);
  }

  nlohmann::json config;
  config["dataset"] = {{"manifest", "manifest.json"}, {"frames_root", "frames"}};
  config["backend"] = {{"kind", "heuristic"}, {"model_id", "heuristic-centerline"}};
  config["templates"] = {{"stage1", "templates/stage1.txt"}, {"stage2", "templates/stage2.txt"}};
  bfpip::atomic_write_file(root / "config.json", config.dump(2) + "\n");

  std::cout << fmt::format("synthetic workspace with {} instances at {}\n", n_instances,
                           root.string());
  std::cout << "try: bfpip ablate --config " << (root / "config.json").string() << "\n";
  return 0;
}
