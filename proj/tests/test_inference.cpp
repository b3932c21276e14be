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

#include <random>

#include "doctest.h"
#include "generators.hpp"
#include "hpgseg/inference.hpp"
#include "hpgseg/point_set.hpp"
#include "hpgseg/synth.hpp"
#include "oracles.hpp"

using namespace hpgseg;

namespace {

class BrokenPredictor : public MaskPredictor {
 public:
  explicit BrokenPredictor(int mode) : mode_(mode) {}
  MaskPrediction predict(const Group& g, const RowMatrixXd&, const PointCloud&) const override {
    const auto n = static_cast<Eigen::Index>(g.point_indices.size());
    if (mode_ == 0) return {Eigen::VectorXd::Ones(n + 1), 1.0};
    if (mode_ == 1) return {Eigen::VectorXd::Ones(n), 1.5};
    return {Eigen::VectorXd::Constant(n, -0.1), 0.5};
  }
  std::string name() const override { return "broken"; }

 private:
  int mode_;
};

}  // namespace

TEST_CASE("NMS matches the reference and is an idempotent antichain") {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 300; ++t) {
    const auto instances = gen::random_instances(rng);
    const double thr = (t % 3 == 0) ? 0.7 : 0.3 + 0.1 * (t % 5);
    const auto kept = nms(instances, thr);
    CHECK(kept == oracle::nms(instances, thr));
    for (std::size_t a = 0; a < kept.size(); ++a)
      for (std::size_t b = a + 1; b < kept.size(); ++b)
        CHECK(set_iou(kept[a].point_indices, kept[b].point_indices) < thr);
    CHECK(nms(gen::as_instances(kept), thr) == kept);
  }
}

TEST_CASE("NMS ordering and validation") {
  std::vector<MaskedInstance> in(3);
  in[0].kept_indices = {0, 1, 2};
  in[0].score = 0.5;
  in[1].kept_indices = {0, 1, 2, 3};
  in[1].score = 0.5;
  in[2].kept_indices = {};
  in[2].score = 1.0;
  const auto out = nms(in, 0.7);
  REQUIRE(out.size() == 1);
  CHECK(out[0].point_indices.size() == 4);
  CHECK(nms(in, 1.0).size() == 2);
  CHECK_THROWS_AS(nms(in, 0.0), ValidationError);
  CHECK_THROWS_AS(nms(in, 1.5), ValidationError);
  CHECK(nms({}, 0.7).empty());
}

TEST_CASE("noiseless scene segments into its instances") {
  SceneSpec spec;
  spec.num_instances = 5;
  spec.seed = 8;
  const Scene scene = generate_scene(spec);
  const PointCloud cloud = simulate_predictions(scene.cloud, scene.instances, NoiseSpec{});
  const OracleExactPredictor predictor(scene.instances, PipelineConfig{});
  const Segmentation seg = segment_scene(cloud, predictor, PipelineConfig{});
  REQUIRE(seg.predictions.size() == scene.instances.size());
  CHECK(seg.groups_per_round.size() == 3);
  std::set<IndexList> got, want;
  for (const auto& p : seg.predictions) {
    got.insert(p.point_indices);
    CHECK(p.confidence == 1.0);
  }
  for (const auto& g : scene.instances) want.insert(g.point_indices);
  CHECK(got == want);
  CHECK(seg.timings.total_ms() >= 0.0);

  PipelineConfig orig;
  orig.cluster_space = ClusterSpace::kOriginal;
  CHECK(segment_scene(cloud, predictor, orig).predictions.size() == scene.instances.size());
}

TEST_CASE("predictor contract violations are internal errors") {
  SceneSpec spec;
  spec.num_instances = 1;
  const Scene scene = generate_scene(spec);
  const PointCloud cloud = simulate_predictions(scene.cloud, scene.instances, NoiseSpec{});
  for (int mode = 0; mode < 3; ++mode)
    CHECK_THROWS_AS(segment_scene(cloud, BrokenPredictor(mode), PipelineConfig{}), InvariantError);
}

TEST_CASE("segmentation needs the fields of its coordinate space") {
  PointCloud cloud;
  cloud.positions = Points3d::Zero(3, 3);
  cloud.semantic_labels = Eigen::VectorXi::Zero(3);
  CHECK_THROWS_WITH_AS(segment_scene(cloud, ConstantPredictor(), PipelineConfig{}),
                       "offsets required", ValidationError);
  PipelineConfig cfg;
  cfg.cluster_space = ClusterSpace::kOriginal;
  cfg.min_group_size = 1;
  const Segmentation seg = segment_scene(cloud, ConstantPredictor(), cfg);
  REQUIRE(seg.predictions.size() == 1);
  CHECK(seg.predictions[0].point_indices == IndexList{0, 1, 2});
}
