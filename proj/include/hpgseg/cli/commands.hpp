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

//
// Command implementations behind the hpgseg executable. Each command is a
// plain function so that tests can drive it without a subprocess.

#ifndef HPGSEG_CLI_COMMANDS_HPP_
#define HPGSEG_CLI_COMMANDS_HPP_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hpgseg/config.hpp"
#include "hpgseg/eval.hpp"
#include "hpgseg/inference.hpp"
#include "hpgseg/io.hpp"
#include "hpgseg/maskscore.hpp"
#include "hpgseg/synth.hpp"
#include "json.hpp"

namespace hpgseg::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitIo = 2, kExitInvariant = 3 };

enum class PredictorKind { kExact, kNoisy, kConstant };

std::string to_string(PredictorKind kind);
PredictorKind predictor_kind_from_string(const std::string& name);

struct PredictorSpec {
  PredictorKind kind = PredictorKind::kExact;
  double mask_flip_rate = 0.0;
  double score_jitter = 0.0;

  void validate() const;
};

nlohmann::json to_json(const PredictorSpec& spec);
PredictorSpec predictor_spec_from_json(const nlohmann::json& doc, const std::string& where);

// The noisy oracle draws from cfg.rng_seed. Oracles require `gts`.
std::unique_ptr<MaskPredictor> make_predictor(const PredictorSpec& spec,
                                              std::vector<GroundTruthInstance> gts,
                                              const PipelineConfig& cfg);

struct ConfigOverrides {
  std::optional<std::vector<double>> radii;
  std::optional<int> min_group_size;
  std::optional<double> nms_iou;
  std::optional<ClusterSpace> space;
  std::optional<std::uint64_t> seed;
  std::optional<double> voxel_size;
};

// Defaults, then the config file if given, then the overrides; validated.
PipelineConfig resolve_config(const std::optional<fs::path>& config_file,
                              const ConfigOverrides& overrides);

// ---------------------------------------------------------------- synth

struct SynthBatchSpec {
  SceneSpec scene;
  NoiseSpec noise;
  int num_scenes = 1;
};

SynthBatchSpec synth_batch_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const SynthBatchSpec& spec);

// Scene k of a batch uses scene and noise seeds derived from (seed, k).
Scene batch_scene(const SynthBatchSpec& spec, int k);

// Writes out_dir/scene_XXX/{cloud.txt, gt.json} and out_dir/manifest.json;
// returns the manifest.
nlohmann::json cmd_synth(const SynthBatchSpec& spec, const fs::path& out_dir);

// -------------------------------------------------------------- segment

struct SegmentRequest {
  fs::path cloud;
  CloudFormat format = CloudFormat::kColumnar;
  // Without a file, oracle ground truth comes from the cloud's inst column.
  std::optional<fs::path> gt;
  PipelineConfig config;
  PredictorSpec predictor;
  fs::path out_dir;
};

SegmentRequest segment_request_from_manifest(const nlohmann::json& manifest);

// Writes predictions.json, assignments.csv and manifest.json into
// req.out_dir and returns the manifest. Prediction indices always refer to
// the input cloud, also when voxel downsampling is enabled.
nlohmann::json cmd_segment(const SegmentRequest& req);

// ----------------------------------------------------------------- eval

// Classes are those appearing in either file.
EvalReport cmd_eval(const fs::path& pred_file, const fs::path& gt_file,
                    const std::optional<fs::path>& out_file,
                    const std::optional<fs::path>& csv_file);

// --------------------------------------------------------------- ablate

struct SceneBatch {
  SceneSpec scene;
  int count = 1;
};

struct NoiseSetting {
  std::string name = "clean";
  NoiseSpec noise;
};

struct AblationSpec {
  std::vector<SceneBatch> batches;
  std::vector<NoiseSetting> noise{NoiseSetting{}};
  std::vector<std::vector<double>> radius_sets{
      {0.01}, {0.03}, {0.05}, {0.01, 0.03}, {0.01, 0.03, 0.05}};
  std::vector<PredictorSpec> predictors{PredictorSpec{}};

  void validate() const;
};

AblationSpec ablation_spec_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const AblationSpec& spec);

struct AblationRow {
  std::vector<double> radii;
  std::string noise;
  std::string predictor;
  std::size_t scenes = 0;
  double mean_proposals = 0.0;
  EvalReport report;
};

// One row per (noise, predictor, radius set), in that nesting order.
// Scene j of batch b uses seeds derived from (seed, b, j); its simulated
// outputs are shared by every radius set and predictor.
std::vector<AblationRow> run_ablation(const AblationSpec& spec, const PipelineConfig& base);

std::string ablation_csv(const std::vector<AblationRow>& rows);

// Writes out_dir/ablation.csv and out_dir/manifest.json.
std::vector<AblationRow> cmd_ablate(const AblationSpec& spec, const PipelineConfig& base,
                                    const fs::path& out_dir);

// ---------------------------------------------------------------- bench

// Scene with about `num_points` points spread over instances of at most
// 5000 points each.
SceneSpec bench_scene_spec(std::size_t num_points, std::uint64_t seed);

struct BenchRow {
  std::size_t requested = 0;
  std::size_t num_points = 0;
  std::size_t num_instances = 0;
  int repeats = 1;
  // Means over the repeats.
  StageTimings timings;
  std::vector<std::size_t> groups_per_round;
  std::size_t peak_groups = 0;
  std::size_t num_proposals = 0;
  std::size_t num_predictions = 0;
};

std::vector<BenchRow> run_bench(const std::vector<std::size_t>& sizes, const PipelineConfig& cfg,
                                int repeats);

std::string bench_csv(const std::vector<BenchRow>& rows);

// ------------------------------------------------------------------ app

// Parses arguments and dispatches; returns the process exit code.
int run(int argc, const char* const* argv);

}  // namespace hpgseg::cli

#endif  // HPGSEG_CLI_COMMANDS_HPP_
