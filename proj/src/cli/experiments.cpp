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

#include <algorithm>
#include <cmath>
#include <set>

#include "hpgseg/cli/commands.hpp"
#include "hpgseg/error.hpp"
#include "hpgseg/format.hpp"
#include "hpgseg/random.hpp"

namespace hpgseg::cli {

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& msg) {
  throw ValidationError(field + ": " + msg);
}

template <typename T>
T get_as(const nlohmann::json& v, const std::string& path) {
  try {
    return v.get<T>();
  } catch (const nlohmann::json::exception&) {
    fail(path, "wrong type");
  }
}

std::string join(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ';';
    append_double(out, xs[i]);
  }
  return out;
}

std::string join(const std::vector<std::size_t>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ';';
    out += std::to_string(xs[i]);
  }
  return out;
}

std::string path_at(const std::string& base, std::size_t i) {
  return base + "[" + std::to_string(i) + "]";
}

}  // namespace

// --------------------------------------------------------------- ablate

void AblationSpec::validate() const {
  if (batches.empty()) fail("batches", "at least one batch required");
  for (std::size_t b = 0; b < batches.size(); ++b) {
    if (batches[b].count < 1) fail(path_at("batches", b) + ".count", "must be >= 1");
    batches[b].scene.validate();
  }
  if (noise.empty()) fail("noise", "at least one setting required");
  for (const NoiseSetting& n : noise) n.noise.validate();
  if (radius_sets.empty()) fail("radius_sets", "at least one radius set required");
  for (std::size_t i = 0; i < radius_sets.size(); ++i) {
    PipelineConfig probe;
    probe.radii = radius_sets[i];
    try {
      probe.validate();
    } catch (const ValidationError& e) {
      fail(path_at("radius_sets", i), e.what());
    }
  }
  if (predictors.empty()) fail("predictors", "at least one predictor required");
  for (const PredictorSpec& p : predictors) p.validate();
}

AblationSpec ablation_spec_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) fail("spec", "expected a JSON object");
  AblationSpec spec;
  for (const auto& [key, v] : doc.items()) {
    if (key == "batches") {
      if (!v.is_array()) fail(key, "expected an array");
      spec.batches.clear();
      for (std::size_t b = 0; b < v.size(); ++b) {
        const std::string where = path_at(key, b);
        SceneBatch batch;
        if (!v[b].is_object()) fail(where, "expected a JSON object");
        for (const auto& [field, x] : v[b].items()) {
          if (field == "scene")
            batch.scene = scene_spec_from_json(x, where + ".scene");
          else if (field == "count")
            batch.count = get_as<int>(x, where + ".count");
          else
            fail(where + "." + field, "unknown field");
        }
        spec.batches.push_back(batch);
      }
    } else if (key == "noise") {
      if (!v.is_array()) fail(key, "expected an array");
      spec.noise.clear();
      for (std::size_t i = 0; i < v.size(); ++i) {
        const std::string where = path_at(key, i);
        if (!v[i].is_object()) fail(where, "expected a JSON object");
        nlohmann::json fields = v[i];
        NoiseSetting setting;
        setting.name = "noise" + std::to_string(i);
        if (fields.contains("name")) {
          setting.name = get_as<std::string>(fields["name"], where + ".name");
          fields.erase("name");
        }
        setting.noise = noise_spec_from_json(fields, where);
        spec.noise.push_back(setting);
      }
    } else if (key == "radius_sets") {
      spec.radius_sets = get_as<std::vector<std::vector<double>>>(v, key);
    } else if (key == "predictors") {
      if (!v.is_array()) fail(key, "expected an array");
      spec.predictors.clear();
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i].is_string())
          spec.predictors.push_back({predictor_kind_from_string(v[i].get<std::string>())});
        else
          spec.predictors.push_back(predictor_spec_from_json(v[i], path_at(key, i)));
      }
    } else {
      fail(key, "unknown field");
    }
  }
  spec.validate();
  return spec;
}

nlohmann::json to_json(const AblationSpec& spec) {
  nlohmann::json batches = nlohmann::json::array();
  for (const SceneBatch& b : spec.batches)
    batches.push_back({{"scene", to_json(b.scene)}, {"count", b.count}});
  nlohmann::json noise = nlohmann::json::array();
  for (const NoiseSetting& n : spec.noise) {
    nlohmann::json entry = to_json(n.noise);
    entry["name"] = n.name;
    noise.push_back(entry);
  }
  nlohmann::json predictors = nlohmann::json::array();
  for (const PredictorSpec& p : spec.predictors) predictors.push_back(to_json(p));
  return {{"batches", batches},
          {"noise", noise},
          {"radius_sets", spec.radius_sets},
          {"predictors", predictors}};
}

std::vector<AblationRow> run_ablation(const AblationSpec& spec, const PipelineConfig& base) {
  spec.validate();
  base.validate();
  if (base.voxel_size > 0) fail("voxel_size", "not supported by ablation sweeps");

  struct Slot {
    Scene scene;
    std::uint64_t b = 0;
    std::uint64_t j = 0;
  };
  std::vector<Slot> slots;
  std::set<int> classes;
  for (std::size_t b = 0; b < spec.batches.size(); ++b) {
    const SceneBatch& batch = spec.batches[b];
    classes.insert(batch.scene.classes.begin(), batch.scene.classes.end());
    for (int j = 0; j < batch.count; ++j) {
      SceneSpec s = batch.scene;
      s.seed = derive_seed(batch.scene.seed, {b, static_cast<std::uint64_t>(j)});
      slots.push_back({generate_scene(s), b, static_cast<std::uint64_t>(j)});
    }
  }

  std::vector<AblationRow> rows;
  for (const NoiseSetting& setting : spec.noise) {
    std::vector<PointCloud> clouds;
    clouds.reserve(slots.size());
    for (const Slot& slot : slots) {
      NoiseSpec noise = setting.noise;
      noise.seed = derive_seed(setting.noise.seed, {slot.b, slot.j});
      clouds.push_back(simulate_predictions(slot.scene.cloud, slot.scene.instances, noise));
    }
    for (const PredictorSpec& predictor_spec : spec.predictors) {
      PredictorSpec effective = predictor_spec;
      if (setting.noise.mask_flip_rate > 0 && effective.kind != PredictorKind::kConstant) {
        effective.kind = PredictorKind::kNoisy;
        effective.mask_flip_rate = setting.noise.mask_flip_rate;
      }
      for (const std::vector<double>& radii : spec.radius_sets) {
        PipelineConfig cfg = base;
        cfg.radii = radii;
        std::vector<SceneInstances> results;
        results.reserve(slots.size());
        std::size_t proposals = 0;
        for (std::size_t s = 0; s < slots.size(); ++s) {
          cfg.rng_seed = derive_seed(base.rng_seed, {slots[s].b, slots[s].j});
          const auto predictor = make_predictor(effective, slots[s].scene.instances, cfg);
          Segmentation seg = segment_scene(clouds[s], *predictor, cfg);
          proposals += seg.num_proposals;
          results.push_back({std::move(seg.predictions), slots[s].scene.instances});
        }
        AblationRow row;
        row.radii = radii;
        row.noise = setting.name;
        row.predictor = to_string(predictor_spec.kind);
        row.scenes = slots.size();
        row.mean_proposals = static_cast<double>(proposals) / static_cast<double>(slots.size());
        row.report = evaluate_batch(results, classes);
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::string out = "radii,noise,predictor,scenes,mean_proposals,ap,ap50,ap25,mprec50,mrec50\n";
  for (const AblationRow& r : rows) {
    out += join(r.radii) + ',' + r.noise + ',' + r.predictor + ',' + std::to_string(r.scenes);
    for (double v : {r.mean_proposals, r.report.ap, r.report.ap50, r.report.ap25, r.report.mprec50,
                     r.report.mrec50}) {
      out += ',';
      append_double(out, v);
    }
    out += '\n';
  }
  return out;
}

std::vector<AblationRow> cmd_ablate(const AblationSpec& spec, const PipelineConfig& base,
                                    const fs::path& out_dir) {
  std::vector<AblationRow> rows = run_ablation(spec, base);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create directory " + out_dir.string() + ": " + ec.message());
  write_text_atomic(out_dir / "ablation.csv", ablation_csv(rows));
  const nlohmann::json manifest = {{"command", "ablate"},
                                   {"spec", to_json(spec)},
                                   {"config", to_json(base)},
                                   {"rows", rows.size()},
                                   {"outputs", {"ablation.csv"}}};
  write_text_atomic(out_dir / "manifest.json", dump_json(manifest));
  return rows;
}

// ---------------------------------------------------------------- bench

SceneSpec bench_scene_spec(std::size_t num_points, std::uint64_t seed) {
  if (num_points == 0) fail("sizes", "point counts must be positive");
  constexpr std::size_t kMaxPerInstance = 5000;
  const std::size_t k =
      std::max<std::size_t>(1, (num_points + kMaxPerInstance - 1) / kMaxPerInstance);
  const int per = static_cast<int>(std::max<std::size_t>(1, num_points / k));
  SceneSpec spec;
  spec.num_instances = static_cast<int>(k);
  spec.classes = {0, 1};
  spec.shape = ShapeKind::kBox;
  spec.points_per_instance = per < 60 ? IntRange{1, per} : IntRange{per / 2, per};
  spec.instance_extent = {0.3, 0.3};
  spec.min_gap = 0.1;
  spec.intra_spacing = 0.008;
  const double cells = std::ceil(std::cbrt(static_cast<double>(k)));
  const double side = 0.6 * cells + 0.6;
  spec.bounds_min = Eigen::Vector3d::Zero();
  spec.bounds_max = Eigen::Vector3d::Constant(side);
  spec.seed = seed;
  return spec;
}

std::vector<BenchRow> run_bench(const std::vector<std::size_t>& sizes, const PipelineConfig& cfg,
                                int repeats) {
  cfg.validate();
  if (repeats < 1) fail("repeats", "must be >= 1");
  for (std::size_t n : sizes)
    if (n == 0) fail("sizes", "point counts must be positive");
  std::vector<BenchRow> rows;
  for (std::size_t n : sizes) {
    const Scene scene = generate_scene(bench_scene_spec(n, derive_seed(cfg.rng_seed, {n})));
    NoiseSpec noise;
    noise.offset_sigma = 0.002;
    noise.seed = derive_seed(cfg.rng_seed, {n, 1});
    const PointCloud cloud = simulate_predictions(scene.cloud, scene.instances, noise);
    const OracleExactPredictor predictor(scene.instances, cfg);

    BenchRow row;
    row.requested = n;
    row.num_points = cloud.size();
    row.num_instances = scene.instances.size();
    row.repeats = repeats;
    for (int r = 0; r < repeats; ++r) {
      const Segmentation seg = segment_scene(cloud, predictor, cfg);
      row.timings.shift_ms += seg.timings.shift_ms / repeats;
      row.timings.group_ms += seg.timings.group_ms / repeats;
      row.timings.mask_ms += seg.timings.mask_ms / repeats;
      row.timings.nms_ms += seg.timings.nms_ms / repeats;
      row.groups_per_round = seg.groups_per_round;
      row.num_proposals = seg.num_proposals;
      row.num_predictions = seg.predictions.size();
    }
    row.peak_groups = row.groups_per_round.empty() ? 0
                                                   : *std::max_element(row.groups_per_round.begin(),
                                                                       row.groups_per_round.end());
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::string out =
      "requested,num_points,num_instances,repeats,shift_ms,group_ms,mask_ms,nms_ms,total_ms,"
      "groups_per_round,peak_groups,proposals,predictions\n";
  for (const BenchRow& r : rows) {
    out += std::to_string(r.requested) + ',' + std::to_string(r.num_points) + ',' +
           std::to_string(r.num_instances) + ',' + std::to_string(r.repeats);
    for (double v : {r.timings.shift_ms, r.timings.group_ms, r.timings.mask_ms, r.timings.nms_ms,
                     r.timings.total_ms()}) {
      out += ',';
      append_double(out, v);
    }
    out += ',' + join(r.groups_per_round) + ',' + std::to_string(r.peak_groups) + ',' +
           std::to_string(r.num_proposals) + ',' + std::to_string(r.num_predictions) + '\n';
  }
  return out;
}

}  // namespace hpgseg::cli
