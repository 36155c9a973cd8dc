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

#include "bfpip/commands.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <ostream>
#include <set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "bfpip/digest.hpp"
#include "bfpip/error.hpp"
#include "bfpip/fs.hpp"
#include "bfpip/jaad.hpp"

namespace bfpip {

namespace fs = std::filesystem;
using nlohmann::json;

void cmd_ingest(const fs::path& annotation_dir, const fs::path& splits_file,
                const fs::path& out_path, std::ostream& out) {
  const SplitSpec splits = SplitSpec::load(splits_file);
  const JaadAdaptResult adapted = adapt_jaad(annotation_dir, splits);
  for (const std::string& line : adapted.excluded) {
    out << "excluded " << line << "\n";
  }
  // The adapter must never emit an invalid manifest; re-validate before
  // publishing.
  const std::string text = serialize_manifest(adapted.manifest);
  parse_manifest_text(text);
  atomic_write_file(out_path, text);

  std::map<Split, int> by_split;
  for (const auto& inst : adapted.manifest.instances) ++by_split[inst.split];
  out << fmt::format("wrote {} ({} instances: {} train, {} val, {} test; {} excluded)\n",
                     out_path.string(), adapted.manifest.instances.size(),
                     by_split[Split::kTrain], by_split[Split::kVal], by_split[Split::kTest],
                     adapted.excluded.size());
}

namespace {

ClipStore make_clip_store(const HarnessConfig& config) {
  ClipStore::Sources sources;
  sources.frames_root = config.frames_root;
  sources.videos_root = config.videos_root;
  sources.video_ext = config.video_ext;
  sources.decode_cmd = config.decode_cmd;

  PackagingOptions packaging;
  packaging.container = config.container;
  packaging.encode_cmd = config.encode_cmd;
  return ClipStore(config.clips_dir, sources, packaging, config.overlay);
}

std::vector<PedestrianInstance> load_test_instances(const HarnessConfig& config) {
  if (config.manifest_path.empty()) {
    throw Error(ErrorKind::kInvalidValue, "config has no dataset.manifest");
  }
  const DatasetManifest manifest = parse_manifest(config.manifest_path);
  std::vector<PedestrianInstance> instances = filter_split(manifest, Split::kTest);
  if (instances.empty()) {
    throw Error(ErrorKind::kNoEvaluableInstances,
                "manifest has no test-split instances: " + config.manifest_path.string());
  }
  return instances;
}

std::vector<std::string> summary_lines(const HarnessConfig& config,
                                       std::span<const PedestrianInstance> instances) {
  std::set<std::string> videos;
  for (const auto& inst : instances) videos.insert(inst.video_id);

  std::vector<std::string> lines;
  lines.push_back(fmt::format("backend: {} ({})", config.backend.model_id,
                              to_string(config.backend.kind)));
  lines.push_back(fmt::format("protocol: {} repeats, {} parsing, temperature {}, seed {}",
                              config.protocol.repeats, to_string(config.protocol.parse_mode),
                              config.backend.temperature, config.backend.seed));
  lines.push_back(fmt::format("dataset: {} test instances across {} videos", instances.size(),
                              videos.size()));
  for (const std::string& deviation : config.deviations) {
    lines.push_back("protocol deviation: " + deviation);
  }
  return lines;
}

void write_run_manifest(const fs::path& run_dir, const std::string& run_id,
                        const HarnessConfig& config, const TemplateSet& templates,
                        const std::vector<ModalityConfig>& configs,
                        const std::vector<std::string>& summary,
                        std::span<const PedestrianInstance> instances) {
  std::set<std::string> videos;
  for (const auto& inst : instances) videos.insert(inst.video_id);

  json doc;
  doc["run_id"] = run_id;
  doc["backend"] = {{"kind", std::string(to_string(config.backend.kind))},
                    {"model_id", config.backend.model_id},
                    {"temperature", config.backend.temperature},
                    {"seed", config.backend.seed},
                    {"timeout_s", config.backend.timeout_s},
                    {"max_attempts", config.backend.retry.max_attempts}};
  doc["protocol"] = {{"repeats", config.protocol.repeats},
                     {"parse_mode", std::string(to_string(config.protocol.parse_mode))},
                     {"tie_break", std::string(to_string(config.protocol.tie_break))}};
  doc["templates"] = {{"stage1_digest", templates.stage1_digest},
                      {"stage2_digest", templates.stage2_digest}};
  json config_labels = json::array();
  for (const ModalityConfig& c : configs) config_labels.push_back(c.label());
  doc["configs"] = std::move(config_labels);
  doc["prompt_order"] = json::array({"stage1", "metadata", "media", "stage2"});
  doc["deviations"] = config.deviations;
  doc["summary"] = summary;
  doc["dataset"] = {{"test_instances", instances.size()}, {"videos", videos.size()}};
  atomic_write_file(run_dir / "manifest.json", doc.dump(2) + "\n");
}

}  // namespace

RunArtifacts execute_run(const HarnessConfig& config,
                         const std::vector<ModalityConfig>& configs,
                         const std::optional<std::string>& run_id_override, std::ostream& out) {
  if (configs.empty()) {
    throw Error(ErrorKind::kInvalidValue, "no modality configurations selected");
  }
  const std::vector<PedestrianInstance> instances = load_test_instances(config);
  const TemplateSet templates = TemplateSet::load(config.stage1_template, config.stage2_template);

  ClipStore clips = make_clip_store(config);
  ResponseCache cache(config.cache_dir);
  const std::unique_ptr<Predictor> predictor = Predictor::create(config.backend, &cache);

  RunContext ctx;
  ctx.clips = &clips;
  ctx.templates = &templates;
  ctx.predictor = predictor.get();
  ctx.protocol = config.protocol;

  // Default run id covers the effective config AND the selected rows, so
  // e.g. two single-modality runs of the same config get distinct dirs.
  std::vector<std::string> run_id_fields = {config_digest(config)};
  for (const ModalityConfig& c : configs) run_id_fields.push_back(c.label());
  const std::string run_id =
      run_id_override.value_or(sha256_fields(run_id_fields).substr(0, 12));
  const fs::path run_dir = config.runs_dir / run_id;
  fs::create_directories(run_dir);

  // Records stream to the .partial sink as they complete (crash-inspectable),
  // then land sorted in records.jsonl.
  const fs::path partial_path = run_dir / "records.jsonl.partial";
  std::ofstream partial(partial_path, std::ios::trunc);
  if (!partial) {
    throw Error(ErrorKind::kInternal, "cannot open " + partial_path.string());
  }
  std::vector<PredictionRecord> all_records;
  AblationOptions options;
  options.configs = configs;
  options.max_concurrency = config.max_concurrency;
  options.record_sink = [&](const PredictionRecord& record) {
    partial << record_to_jsonl(record) << "\n";
    partial.flush();
    all_records.push_back(record);
  };

  AblationResult result = run_ablation(ctx, instances, options);
  result.run_id = run_id;
  result.summary_lines = summary_lines(config, instances);

  std::map<std::string, size_t> config_order;
  for (size_t i = 0; i < configs.size(); ++i) config_order[configs[i].label()] = i;
  std::sort(all_records.begin(), all_records.end(),
            [&](const PredictionRecord& a, const PredictionRecord& b) {
              const auto ka = std::pair(config_order[a.config_label], a.instance_id);
              const auto kb = std::pair(config_order[b.config_label], b.instance_id);
              return ka < kb;
            });
  std::string records_text;
  for (const PredictionRecord& record : all_records) {
    records_text += record_to_jsonl(record);
    records_text += "\n";
  }
  atomic_write_file(run_dir / "records.jsonl", records_text);
  partial.close();
  fs::remove(partial_path);

  write_run_manifest(run_dir, run_id, config, templates, configs, result.summary_lines,
                     instances);
  for (const ReportFormat format :
       {ReportFormat::kMarkdown, ReportFormat::kCsv, ReportFormat::kJson}) {
    const std::string report = emit_report(result, reference_rows(), format);
    atomic_write_file(run_dir / fmt::format("report.{}", report_extension(format)), report);
  }

  for (const RowResult& row : result.rows) {
    const EvalMetrics& m = row.metrics;
    const auto show = [](const std::optional<double>& v) {
      return v ? fmt::format("{:.2f}", round2_half_up(*v)) : std::string("--");
    };
    out << fmt::format("{}: acc {} auc {} f1 {} p {} r {} (n={}, failed={})\n",
                       row.config.label(), show(m.acc), show(m.auc), show(m.f1),
                       show(m.precision), show(m.recall), m.n, row.failed_instances);
  }
  out << "run directory: " << run_dir.string() << "\n";

  RunArtifacts artifacts;
  artifacts.run_dir = run_dir;
  artifacts.result = std::move(result);
  return artifacts;
}

RunArtifacts cmd_run(const HarnessConfig& config, const ModalityConfig& modality,
                     const std::optional<std::string>& run_id, std::ostream& out) {
  return execute_run(config, {modality}, run_id, out);
}

RunArtifacts cmd_ablate(const HarnessConfig& config, const std::optional<std::string>& run_id,
                        std::ostream& out) {
  std::vector<ModalityConfig> configs = config.configs;
  if (configs.empty()) {
    configs.assign(ModalityConfig::all().begin(), ModalityConfig::all().end());
  }
  return execute_run(config, configs, run_id, out);
}

void cmd_prepare(const HarnessConfig& config, Split split, bool annotated, std::ostream& out) {
  if (config.manifest_path.empty()) {
    throw Error(ErrorKind::kInvalidValue, "config has no dataset.manifest");
  }
  const DatasetManifest manifest = parse_manifest(config.manifest_path);
  const std::vector<PedestrianInstance> instances = filter_split(manifest, split);
  ClipStore clips = make_clip_store(config);
  for (const PedestrianInstance& instance : instances) {
    const ObservationWindow window = compute_window(instance.event_frame);
    const ClipBundle bundle = clips.get_or_build(instance, window, annotated);
    out << fmt::format("{} -> {} ({})\n", instance.instance_id, bundle.media_ref.string(),
                       bundle.content_digest.substr(0, 12));
  }
  out << fmt::format("prepared {} {} clips for split {}\n", instances.size(),
                     annotated ? "annotated" : "unannotated", to_string(split));
}

std::string cmd_report(const fs::path& run_dir, ReportFormat format, std::ostream& out) {
  const fs::path records_path = run_dir / "records.jsonl";
  const fs::path manifest_path = run_dir / "manifest.json";
  if (!fs::exists(records_path)) {
    throw Error(ErrorKind::kEmptyRecordSet, "no records.jsonl in " + run_dir.string());
  }

  std::vector<PredictionRecord> records;
  {
    std::ifstream in(records_path);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty()) records.push_back(record_from_jsonl(line));
    }
  }
  if (records.empty()) {
    throw Error(ErrorKind::kEmptyRecordSet, records_path.string());
  }

  AblationResult result;
  std::vector<std::string> config_order;
  if (fs::exists(manifest_path)) {
    const json manifest = json::parse(read_file(manifest_path), nullptr, false);
    if (!manifest.is_discarded()) {
      result.run_id = manifest.value("run_id", "");
      for (const auto& line : manifest.value("summary", json::array())) {
        result.summary_lines.push_back(line.get<std::string>());
      }
      for (const auto& label : manifest.value("configs", json::array())) {
        config_order.push_back(label.get<std::string>());
      }
    }
  }
  if (config_order.empty()) {
    // No manifest: fall back to the fixed ablation ordering of whatever
    // configurations appear in the records.
    std::set<std::string> seen;
    for (const PredictionRecord& r : records) seen.insert(r.config_label);
    for (const ModalityConfig& c : ModalityConfig::all()) {
      if (seen.contains(c.label())) config_order.push_back(c.label());
    }
  }

  std::map<std::string, std::vector<PredictionRecord>> by_config;
  for (PredictionRecord& r : records) by_config[r.config_label].push_back(std::move(r));
  for (const std::string& label : config_order) {
    const auto it = by_config.find(label);
    if (it == by_config.end()) continue;
    const auto config = ModalityConfig::from_label(label);
    if (!config) {
      throw Error(ErrorKind::kInvalidValue, "records carry unknown config label " + label);
    }
    result.rows.push_back(summarize_records(*config, it->second));
  }

  const std::string report = emit_report(result, reference_rows(), format);
  const fs::path report_path = run_dir / fmt::format("report.{}", report_extension(format));
  atomic_write_file(report_path, report);
  out << "wrote " << report_path.string() << "\n";
  return report;
}

void cmd_cache_stats(const HarnessConfig& config, std::ostream& out) {
  const ResponseCache cache(config.cache_dir);
  const ResponseCache::Stats stats = cache.stats();
  out << fmt::format("cache {}: {} entries, {} bytes\n", config.cache_dir.string(),
                     stats.entries, stats.bytes);
}

void cmd_cache_purge(const HarnessConfig& config, std::ostream& out) {
  const ResponseCache cache(config.cache_dir);
  const std::size_t removed = cache.purge();
  out << fmt::format("purged {} entries from {}\n", removed, config.cache_dir.string());
}

}  // namespace bfpip
