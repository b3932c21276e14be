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

#include <exception>
#include <iostream>

#include "CLI11.hpp"
#include "hpgseg/cli/commands.hpp"
#include "hpgseg/error.hpp"

namespace hpgseg::cli {

namespace {

struct CommonFlags {
  std::vector<double> radii;
  int min_group_size = 0;
  double nms_iou = 0;
  std::string space;
  std::uint64_t seed = 0;
  double voxel_size = 0;
  std::string config;
};

void add_pipeline_flags(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "PipelineConfig JSON file");
  cmd->add_option("--radii", f.radii, "Grouping radii, strictly increasing")->delimiter(',');
  cmd->add_option("--min-group-size", f.min_group_size, "Minimum group size");
  cmd->add_option("--nms-iou", f.nms_iou, "NMS IoU threshold");
  cmd->add_option("--space", f.space, "Clustering space")
      ->check(CLI::IsMember({"shifted", "original"}));
  cmd->add_option("--seed", f.seed, "Random seed");
  cmd->add_option("--voxel-size", f.voxel_size, "Voxel size for downsampling, 0 disables");
}

PipelineConfig config_from_flags(const CLI::App* cmd, const CommonFlags& f) {
  ConfigOverrides o;
  if (cmd->count("--radii")) o.radii = f.radii;
  if (cmd->count("--min-group-size")) o.min_group_size = f.min_group_size;
  if (cmd->count("--nms-iou")) o.nms_iou = f.nms_iou;
  if (cmd->count("--space")) o.space = cluster_space_from_string(f.space);
  if (cmd->count("--seed")) o.seed = f.seed;
  if (cmd->count("--voxel-size")) o.voxel_size = f.voxel_size;
  std::optional<fs::path> file;
  if (!f.config.empty()) file = f.config;
  return resolve_config(file, o);
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"Point-cloud instance segmentation by hierarchical point grouping"};
  app.require_subcommand(1);

  // synth
  std::string synth_spec, synth_out;
  std::uint64_t synth_seed = 0;
  auto* synth = app.add_subcommand("synth", "Generate synthetic scenes with ground truth");
  synth->add_option("--spec", synth_spec, "Scene batch JSON")->required();
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--seed", synth_seed, "Overrides the scene and noise seeds");

  // segment
  CommonFlags seg_flags;
  std::string seg_cloud, seg_gt, seg_out, seg_manifest, seg_predictor = "exact",
                                                        seg_format = "columnar";
  double seg_flip = 0, seg_jitter = 0;
  auto* segment = app.add_subcommand("segment", "Segment one point cloud");
  segment->add_option("--cloud", seg_cloud, "Input cloud");
  segment->add_option("--format", seg_format, "Cloud format")
      ->check(CLI::IsMember({"columnar", "ply"}));
  segment->add_option("--gt", seg_gt, "Ground-truth JSON for oracle predictors");
  segment->add_option("--predictor", seg_predictor, "Mask predictor")
      ->check(CLI::IsMember({"exact", "noisy", "constant"}));
  segment->add_option("--mask-flip-rate", seg_flip, "Noisy oracle mask flip rate");
  segment->add_option("--score-jitter", seg_jitter, "Noisy oracle score jitter");
  segment->add_option("--manifest", seg_manifest, "Re-run from a segment manifest");
  segment->add_option("--out", seg_out, "Output directory");
  add_pipeline_flags(segment, seg_flags);

  // eval
  std::string eval_pred, eval_gt, eval_out, eval_csv;
  auto* eval = app.add_subcommand("eval", "Evaluate predictions against ground truth");
  eval->add_option("--pred", eval_pred, "Predictions JSON")->required();
  eval->add_option("--gt", eval_gt, "Ground-truth JSON")->required();
  eval->add_option("--out", eval_out, "Report JSON file");
  eval->add_option("--csv", eval_csv, "Per-class CSV file");

  // ablate
  CommonFlags abl_flags;
  std::string abl_spec, abl_out;
  auto* ablate = app.add_subcommand("ablate", "Sweep radius sets and noise settings");
  ablate->add_option("--spec", abl_spec, "Ablation JSON")->required();
  ablate->add_option("--out", abl_out, "Output directory")->required();
  add_pipeline_flags(ablate, abl_flags);

  // bench
  CommonFlags bench_flags;
  std::vector<std::size_t> bench_sizes;
  int bench_repeats = 1;
  std::string bench_out;
  auto* bench = app.add_subcommand("bench", "Time the pipeline on synthetic scenes");
  bench->add_option("--sizes", bench_sizes, "Point counts")->delimiter(',');
  bench->add_option("--repeats", bench_repeats, "Runs averaged per size");
  bench->add_option("--out", bench_out, "CSV file; stdout when omitted");
  add_pipeline_flags(bench, bench_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*synth) {
      SynthBatchSpec spec = synth_batch_from_json(read_json(synth_spec));
      if (synth->count("--seed")) spec.scene.seed = spec.noise.seed = synth_seed;
      const auto manifest = cmd_synth(spec, synth_out);
      std::cout << "wrote " << manifest["scenes"].size() << " scene(s) to " << synth_out << '\n';
    } else if (*segment) {
      SegmentRequest req;
      if (!seg_manifest.empty()) {
        req = segment_request_from_manifest(read_json(seg_manifest));
        if (!seg_out.empty()) req.out_dir = seg_out;
      } else {
        if (seg_cloud.empty()) throw ValidationError("--cloud: required without --manifest");
        if (seg_out.empty()) throw ValidationError("--out: required without --manifest");
        req.cloud = seg_cloud;
        req.format = cloud_format_from_string(seg_format);
        if (!seg_gt.empty()) req.gt = seg_gt;
        req.config = config_from_flags(segment, seg_flags);
        req.predictor.kind = predictor_kind_from_string(seg_predictor);
        req.predictor.mask_flip_rate = seg_flip;
        req.predictor.score_jitter = seg_jitter;
        req.out_dir = seg_out;
      }
      const auto manifest = cmd_segment(req);
      std::cout << manifest["num_predictions"] << " prediction(s) written to "
                << req.out_dir.string() << '\n';
    } else if (*eval) {
      std::optional<fs::path> out, csv;
      if (!eval_out.empty()) out = eval_out;
      if (!eval_csv.empty()) csv = eval_csv;
      const EvalReport report = cmd_eval(eval_pred, eval_gt, out, csv);
      std::cout << dump_json(to_json(report));
    } else if (*ablate) {
      const AblationSpec spec = ablation_spec_from_json(read_json(abl_spec));
      const auto rows = cmd_ablate(spec, config_from_flags(ablate, abl_flags), abl_out);
      std::cout << ablation_csv(rows);
    } else if (*bench) {
      const auto rows =
          run_bench(bench_sizes, config_from_flags(bench, bench_flags), bench_repeats);
      const std::string csv = bench_csv(rows);
      if (bench_out.empty())
        std::cout << csv;
      else
        write_text_atomic(bench_out, csv);
    }
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const InvariantError& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInvariant;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInvariant;
  }
  return kExitOk;
}

}  // namespace hpgseg::cli
