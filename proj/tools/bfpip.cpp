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

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "bfpip/commands.hpp"
#include "bfpip/error.hpp"

namespace {

using bfpip::Error;
using bfpip::HarnessConfig;

// Nonzero exits carry a machine-readable error summary on stderr.
int report_error(const Error& e) {
  nlohmann::json doc;
  doc["error"] = {{"kind", std::string(bfpip::error_kind_name(e.kind()))},
                  {"message", e.message()},
                  {"details", e.details()}};
  std::cerr << doc.dump() << "\n";
  return 1;
}

struct ConfigArgs {
  std::string path;
  std::vector<std::string> overrides;

  HarnessConfig load() const { return bfpip::load_config(path, overrides); }
};

void add_config_options(CLI::App* cmd, ConfigArgs& args, bool required = true) {
  auto* opt = cmd->add_option("--config,-c", args.path, "harness config JSON");
  if (required) opt->required();
  cmd->add_option("--set", args.overrides,
                  "config override key.path=value (repeatable, applied last)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"zero-shot pedestrian crossing-intention evaluation harness"};
  app.require_subcommand(1);

  // ingest
  std::string ingest_annotations, ingest_splits, ingest_out;
  auto* ingest = app.add_subcommand("ingest", "JAAD-style annotations -> canonical manifest");
  ingest->add_option("--annotations", ingest_annotations, "annotation directory")->required();
  ingest->add_option("--splits", ingest_splits, "split spec JSON")->required();
  ingest->add_option("--out", ingest_out, "output manifest path")->required();

  // prepare
  ConfigArgs prepare_cfg;
  std::string prepare_manifest, prepare_split = "test", prepare_mode = "unannotated";
  auto* prepare = app.add_subcommand("prepare", "pre-build clips for a split");
  add_config_options(prepare, prepare_cfg);
  prepare->add_option("--manifest", prepare_manifest, "manifest path (overrides config)");
  prepare->add_option("--split", prepare_split, "train|val|test")->capture_default_str();
  prepare->add_option("--mode", prepare_mode, "annotated|unannotated")->capture_default_str();

  // run
  ConfigArgs run_cfg;
  std::string run_modality = "AV+S";
  std::string run_id;
  auto* run = app.add_subcommand("run", "evaluate the test split under one modality config");
  add_config_options(run, run_cfg);
  run->add_option("--modality", run_modality, "e.g. UV, AV+S, UV+BB+S")->capture_default_str();
  run->add_option("--run-id", run_id, "run directory name (default: config digest)");

  // ablate
  ConfigArgs ablate_cfg;
  std::string ablate_run_id;
  auto* ablate = app.add_subcommand("ablate", "full 8-configuration modality sweep");
  add_config_options(ablate, ablate_cfg);
  ablate->add_option("--run-id", ablate_run_id, "run directory name (default: config digest)");

  // report
  std::string report_run_dir, report_format = "md";
  auto* report = app.add_subcommand("report", "re-emit a report from stored records");
  report->add_option("--run", report_run_dir, "run directory")->required();
  report->add_option("--format", report_format, "md|csv|json")->capture_default_str();

  // cache
  ConfigArgs cache_cfg;
  bool cache_stats = false, cache_purge = false;
  auto* cache = app.add_subcommand("cache", "response cache maintenance");
  add_config_options(cache, cache_cfg, /*required=*/false);
  cache->add_flag("--stats", cache_stats, "print entry count and size");
  cache->add_flag("--purge", cache_purge, "delete every cache entry");

  CLI11_PARSE(app, argc, argv);

  try {
    if (ingest->parsed()) {
      bfpip::cmd_ingest(ingest_annotations, ingest_splits, ingest_out, std::cout);
      return 0;
    }
    if (prepare->parsed()) {
      if (!prepare_manifest.empty()) {
        prepare_cfg.overrides.push_back("dataset.manifest=" + prepare_manifest);
      }
      const auto split = bfpip::split_from_string(prepare_split);
      if (!split) throw Error(bfpip::ErrorKind::kInvalidValue, "--split must be train|val|test");
      if (prepare_mode != "annotated" && prepare_mode != "unannotated") {
        throw Error(bfpip::ErrorKind::kInvalidValue, "--mode must be annotated|unannotated");
      }
      bfpip::cmd_prepare(prepare_cfg.load(), *split, prepare_mode == "annotated", std::cout);
      return 0;
    }
    if (run->parsed()) {
      const auto modality = bfpip::ModalityConfig::from_label(run_modality);
      if (!modality) {
        throw Error(bfpip::ErrorKind::kInvalidValue, "unknown modality label " + run_modality);
      }
      bfpip::cmd_run(run_cfg.load(), *modality,
                     run_id.empty() ? std::nullopt : std::optional(run_id), std::cout);
      return 0;
    }
    if (ablate->parsed()) {
      bfpip::cmd_ablate(ablate_cfg.load(),
                        ablate_run_id.empty() ? std::nullopt : std::optional(ablate_run_id),
                        std::cout);
      return 0;
    }
    if (report->parsed()) {
      const auto format = bfpip::report_format_from_string(report_format);
      if (!format) {
        throw Error(bfpip::ErrorKind::kUnsupportedFormat, report_format);
      }
      const std::string text = bfpip::cmd_report(report_run_dir, *format, std::cerr);
      std::cout << text;
      return 0;
    }
    if (cache->parsed()) {
      HarnessConfig cfg;
      if (!cache_cfg.path.empty()) {
        cfg = cache_cfg.load();
      } else {
        cfg.cache_dir = "cache";
      }
      if (cache_purge) {
        bfpip::cmd_cache_purge(cfg, std::cout);
      } else if (cache_stats) {
        bfpip::cmd_cache_stats(cfg, std::cout);
      } else {
        throw Error(bfpip::ErrorKind::kInvalidValue, "cache needs --stats or --purge");
      }
      return 0;
    }
  } catch (const Error& e) {
    return report_error(e);
  } catch (const std::exception& e) {
    return report_error(Error(bfpip::ErrorKind::kInternal, e.what()));
  }
  return 1;
}
