// Copyright 2026 The hpgseg Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "hpgseg/cli/commands.hpp"

#include <chrono>
#include <cstdio>
#include <set>
#include <unordered_map>

#include "hpgseg/cloud.hpp"
#include "hpgseg/error.hpp"
#include "hpgseg/random.hpp"

namespace hpgseg::cli {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

[[noreturn]] void fail(const std::string& field, const std::string& msg) {
  throw ValidationError(field + ": " + msg);
}

const nlohmann::json& require(const nlohmann::json& doc, const std::string& key,
                              const std::string& where) {
  if (!doc.is_object() || !doc.contains(key)) fail(where + "." + key, "missing");
  return doc[key];
}

template <typename T>
T get_as(const nlohmann::json& v, const std::string& path) {
  try {
    return v.get<T>();
  } catch (const nlohmann::json::exception&) {
    fail(path, "wrong type");
  }
}

std::string format_name(CloudFormat format) {
  return format == CloudFormat::kColumnar ? "columnar" : "ply";
}

std::string absolute_string(const fs::path& p) {
  return fs::absolute(p).lexically_normal().string();
}

void make_dirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

bool needs_ground_truth(PredictorKind kind) { return kind != PredictorKind::kConstant; }

std::string scene_dir_name(int k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "scene_%03d", k);
  return buf;
}

// Keeps the members of each instance that survive in `kept` (ascending
// original indices) and renumbers them; emptied instances are dropped.
std::vector<GroundTruthInstance> restrict_ground_truth(const std::vector<GroundTruthInstance>& gts,
                                                       const IndexList& kept,
                                                       const Points3d& positions) {
  std::unordered_map<int, int> renumber;
  for (std::size_t i = 0; i < kept.size(); ++i) renumber[kept[i]] = static_cast<int>(i);
  std::vector<GroundTruthInstance> out;
  for (const GroundTruthInstance& gt : gts) {
    IndexList members;
    for (int i : gt.point_indices)
      if (auto it = renumber.find(i); it != renumber.end()) members.push_back(it->second);
    if (!members.empty())
      out.push_back(make_gt_instance(gt.id, gt.semantic_class, std::move(members), positions));
  }
  return out;
}

}  // namespace

std::string to_string(PredictorKind kind) {
  switch (kind) {
    case PredictorKind::kExact:
      return "exact";
    case PredictorKind::kNoisy:
      return "noisy";
    case PredictorKind::kConstant:
      return "constant";
  }
  return "exact";
}

PredictorKind predictor_kind_from_string(const std::string& name) {
  if (name == "exact") return PredictorKind::kExact;
  if (name == "noisy") return PredictorKind::kNoisy;
  if (name == "constant") return PredictorKind::kConstant;
  throw ValidationError("predictor: expected exact, noisy or constant, got '" + name + "'");
}

void PredictorSpec::validate() const {
  if (!(mask_flip_rate >= 0 && mask_flip_rate < 1))
    fail("predictor.mask_flip_rate", "must lie in [0, 1)");
  if (!(score_jitter >= 0)) fail("predictor.score_jitter", "must be >= 0");
}

nlohmann::json to_json(const PredictorSpec& spec) {
  return {{"kind", to_string(spec.kind)},
          {"mask_flip_rate", spec.mask_flip_rate},
          {"score_jitter", spec.score_jitter}};
}

PredictorSpec predictor_spec_from_json(const nlohmann::json& doc, const std::string& where) {
  if (!doc.is_object()) fail(where, "expected a JSON object");
  PredictorSpec spec;
  for (const auto& [key, v] : doc.items()) {
    const std::string path = where + "." + key;
    if (key == "kind")
      spec.kind = predictor_kind_from_string(get_as<std::string>(v, path));
    else if (key == "mask_flip_rate")
      spec.mask_flip_rate = get_as<double>(v, path);
    else if (key == "score_jitter")
      spec.score_jitter = get_as<double>(v, path);
    else
      fail(path, "unknown field");
  }
  spec.validate();
  return spec;
}

std::unique_ptr<MaskPredictor> make_predictor(const PredictorSpec& spec,
                                              std::vector<GroundTruthInstance> gts,
                                              const PipelineConfig& cfg) {
  spec.validate();
  switch (spec.kind) {
    case PredictorKind::kExact:
      return std::make_unique<OracleExactPredictor>(std::move(gts), cfg);
    case PredictorKind::kNoisy:
      return std::make_unique<OracleNoisyPredictor>(std::move(gts), cfg, spec.mask_flip_rate,
                                                    spec.score_jitter, cfg.rng_seed);
    case PredictorKind::kConstant:
      return std::make_unique<ConstantPredictor>();
  }
  throw InvariantError("unhandled predictor kind");
}

PipelineConfig resolve_config(const std::optional<fs::path>& config_file,
                              const ConfigOverrides& overrides) {
  PipelineConfig cfg;
  if (config_file) cfg = config_from_json(read_json(*config_file));
  if (overrides.radii) cfg.radii = *overrides.radii;
  if (overrides.min_group_size) cfg.min_group_size = *overrides.min_group_size;
  if (overrides.nms_iou) cfg.nms_iou = *overrides.nms_iou;
  if (overrides.space) cfg.cluster_space = *overrides.space;
  if (overrides.seed) cfg.rng_seed = *overrides.seed;
  if (overrides.voxel_size) cfg.voxel_size = *overrides.voxel_size;
  cfg.validate();
  return cfg;
}

// ---------------------------------------------------------------- synth

SynthBatchSpec synth_batch_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) fail("spec", "expected a JSON object");
  SynthBatchSpec spec;
  for (const auto& [key, v] : doc.items()) {
    if (key == "scene")
      spec.scene = scene_spec_from_json(v, "scene");
    else if (key == "noise")
      spec.noise = noise_spec_from_json(v, "noise");
    else if (key == "num_scenes")
      spec.num_scenes = get_as<int>(v, "num_scenes");
    else
      fail(key, "unknown field");
  }
  if (spec.num_scenes < 1) fail("num_scenes", "must be >= 1");
  return spec;
}

nlohmann::json to_json(const SynthBatchSpec& spec) {
  return {{"scene", to_json(spec.scene)},
          {"noise", to_json(spec.noise)},
          {"num_scenes", spec.num_scenes}};
}

Scene batch_scene(const SynthBatchSpec& spec, int k) {
  SceneSpec scene_spec = spec.scene;
  scene_spec.seed = derive_seed(spec.scene.seed, {static_cast<std::uint64_t>(k)});
  NoiseSpec noise = spec.noise;
  noise.seed = derive_seed(spec.noise.seed, {static_cast<std::uint64_t>(k)});
  Scene scene = generate_scene(scene_spec);
  scene.cloud = simulate_predictions(scene.cloud, scene.instances, noise);
  return scene;
}

nlohmann::json cmd_synth(const SynthBatchSpec& spec, const fs::path& out_dir) {
  spec.scene.validate();
  spec.noise.validate();
  if (spec.num_scenes < 1) fail("num_scenes", "must be >= 1");
  make_dirs(out_dir);
  nlohmann::json scenes = nlohmann::json::array();
  for (int k = 0; k < spec.num_scenes; ++k) {
    const Scene scene = batch_scene(spec, k);
    const std::string name = scene_dir_name(k);
    make_dirs(out_dir / name);
    save_cloud(out_dir / name / "cloud.txt", scene.cloud, CloudFormat::kColumnar);
    write_text_atomic(out_dir / name / "gt.json", dump_json(to_json(scene.instances)));
    scenes.push_back({{"dir", name},
                      {"num_points", scene.cloud.size()},
                      {"num_instances", scene.instances.size()}});
  }
  nlohmann::json manifest = {{"command", "synth"}, {"spec", to_json(spec)}, {"scenes", scenes}};
  write_text_atomic(out_dir / "manifest.json", dump_json(manifest));
  return manifest;
}

// -------------------------------------------------------------- segment

SegmentRequest segment_request_from_manifest(const nlohmann::json& manifest) {
  const std::string where = "manifest";
  if (!manifest.is_object()) fail(where, "expected a JSON object");
  if (manifest.value("command", std::string()) != "segment")
    fail(where + ".command", "expected 'segment'");
  SegmentRequest req;
  const nlohmann::json& inputs = require(manifest, "inputs", where);
  req.cloud =
      get_as<std::string>(require(inputs, "cloud", where + ".inputs"), where + ".inputs.cloud");
  req.format = cloud_format_from_string(
      get_as<std::string>(require(inputs, "format", where + ".inputs"), where + ".inputs.format"));
  if (inputs.contains("gt") && !inputs["gt"].is_null())
    req.gt = get_as<std::string>(inputs["gt"], where + ".inputs.gt");
  req.config = config_from_json(require(manifest, "config", where));
  req.predictor =
      predictor_spec_from_json(require(manifest, "predictor", where), where + ".predictor");
  req.out_dir = get_as<std::string>(require(manifest, "output_dir", where), where + ".output_dir");
  return req;
}

nlohmann::json cmd_segment(const SegmentRequest& req) {
  const auto start = Clock::now();
  req.config.validate();
  req.predictor.validate();

  auto t0 = Clock::now();
  const PointCloud input = load_cloud(req.cloud, req.format);
  std::vector<GroundTruthInstance> gts;
  if (needs_ground_truth(req.predictor.kind) && req.gt) {
    gts = ground_truth_from_json(read_json(*req.gt));
    for (const GroundTruthInstance& gt : gts)
      if (!gt.point_indices.empty() && (gt.point_indices.front() < 0 ||
                                        gt.point_indices.back() >= static_cast<int>(input.size())))
        fail("gt", "instance " + std::to_string(gt.id) + " references points outside the cloud");
  }
  const double load_ms = elapsed_ms(t0);

  IndexList representatives;
  const bool voxelize = req.config.voxel_size > 0;
  PointCloud cloud;
  if (voxelize) {
    representatives = voxel_representatives(input.positions, req.config.voxel_size);
    cloud = select_points(input, representatives);
    if (!gts.empty()) gts = restrict_ground_truth(gts, representatives, cloud.positions);
  } else {
    cloud = input;
  }
  if (needs_ground_truth(req.predictor.kind) && !req.gt)
    gts = gt_instances_from_ids(cloud, semantic_labels_of(cloud));

  const auto predictor = make_predictor(req.predictor, gts, req.config);
  Segmentation seg = segment_scene(cloud, *predictor, req.config);
  if (voxelize)
    for (Prediction& p : seg.predictions)
      for (int& i : p.point_indices) i = representatives[static_cast<std::size_t>(i)];

  t0 = Clock::now();
  make_dirs(req.out_dir);
  write_text_atomic(req.out_dir / "predictions.json", dump_json(to_json(seg.predictions)));
  write_text_atomic(req.out_dir / "assignments.csv", assignment_csv(seg.predictions, input.size()));
  const double write_ms = elapsed_ms(t0);

  nlohmann::json manifest = {
      {"command", "segment"},
      {"inputs",
       {{"cloud", absolute_string(req.cloud)},
        {"format", format_name(req.format)},
        {"gt", req.gt ? nlohmann::json(absolute_string(*req.gt)) : nlohmann::json(nullptr)}}},
      {"config", to_json(req.config)},
      {"predictor", to_json(req.predictor)},
      {"output_dir", absolute_string(req.out_dir)},
      {"outputs", {"predictions.json", "assignments.csv"}},
      {"H", req.config.radii.size()},
      {"num_points", input.size()},
      {"num_points_grouped", cloud.size()},
      {"groups_per_round", seg.groups_per_round},
      {"num_proposals", seg.num_proposals},
      {"num_masked", seg.num_masked},
      {"num_predictions", seg.predictions.size()},
  };
  manifest["timings_ms"] = {{"load", load_ms},
                            {"shift", seg.timings.shift_ms},
                            {"group", seg.timings.group_ms},
                            {"mask", seg.timings.mask_ms},
                            {"nms", seg.timings.nms_ms},
                            {"write", write_ms},
                            {"total", elapsed_ms(start)}};
  write_text_atomic(req.out_dir / "manifest.json", dump_json(manifest));
  return manifest;
}

// ----------------------------------------------------------------- eval

EvalReport cmd_eval(const fs::path& pred_file, const fs::path& gt_file,
                    const std::optional<fs::path>& out_file,
                    const std::optional<fs::path>& csv_file) {
  const std::vector<Prediction> preds = predictions_from_json(read_json(pred_file));
  const std::vector<GroundTruthInstance> gts = ground_truth_from_json(read_json(gt_file));
  std::set<int> classes;
  for (const Prediction& p : preds) classes.insert(p.semantic_class);
  for (const GroundTruthInstance& g : gts) classes.insert(g.semantic_class);
  const EvalReport report = evaluate(preds, gts, classes);
  if (out_file) write_text_atomic(*out_file, dump_json(to_json(report)));
  if (csv_file) write_text_atomic(*csv_file, per_class_csv(report));
  return report;
}

}  // namespace hpgseg::cli
