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
#include "hpgseg/hpg.hpp"
#include "oracles.hpp"

using namespace hpgseg;

TEST_CASE("grouping equals the all-pairs reference on random clouds") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 60; ++trial) {
    Points3d coords;
    Eigen::VectorXi labels;
    oracle::random_blobs(rng, 20 + static_cast<int>(rng() % 300), 1 + trial % 3,
                         0.005 + 0.01 * (trial % 4), coords, labels);
    PipelineConfig cfg;
    cfg.min_group_size = 1 + static_cast<int>(rng() % 5);
    if (trial % 5 == 0) cfg.ignored_classes = {0};
    if (trial % 4 == 1) cfg.radii = {0.02};
    const auto result = hierarchical_group(coords, labels, cfg);
    const auto expected = oracle::brute_hpg(coords, labels, cfg.ignored_classes, cfg.radii);
    REQUIRE(result.rounds.size() == expected.size());
    for (std::size_t h = 0; h < expected.size(); ++h) {
      CHECK(oracle::to_group_set(result.rounds[h]) == expected[h]);
      CHECK(std::is_sorted(result.rounds[h].begin(), result.rounds[h].end(), group_less));
      for (const Group& g : result.rounds[h]) CHECK(g.round == static_cast<int>(h + 1));
      if (h > 0) CHECK(oracle::refinement_violations(result.rounds[h - 1], result.rounds[h]) == 0);
    }
  }
}

TEST_CASE("coincident and boundary points") {
  Points3d coords(4, 3);
  coords << 0, 0, 0, 0, 0, 0, 0.01, 0, 0, 0.035, 0, 0;
  Eigen::VectorXi labels = Eigen::VectorXi::Zero(4);
  const auto r1 = cluster_round1(coords, labels, {}, 0.01);
  REQUIRE(r1.size() == 3);
  CHECK(r1[0].point_indices == IndexList{0, 1});
  const auto r2 = merge_round(r1, coords, 0.01, 0.02, 2);
  REQUIRE(r2.size() == 2);
  CHECK(r2[0].point_indices == IndexList{0, 1, 2});
  CHECK(r2[1].point_indices == IndexList{3});
}

TEST_CASE("different classes never merge") {
  Points3d coords(2, 3);
  coords << 0, 0, 0, 0.001, 0, 0;
  Eigen::VectorXi labels(2);
  labels << 0, 1;
  PipelineConfig cfg;
  cfg.min_group_size = 1;
  const auto result = hierarchical_group(coords, labels, cfg);
  for (const auto& round : result.rounds) CHECK(round.size() == 2);
}

TEST_CASE("ignored classes join no group") {
  Points3d coords(3, 3);
  coords << 0, 0, 0, 0.001, 0, 0, 0.002, 0, 0;
  Eigen::VectorXi labels(3);
  labels << 0, 2, 0;
  const auto groups = cluster_round1(coords, labels, {2}, 0.0015);
  REQUIRE(groups.size() == 2);
  CHECK(groups[0].point_indices == IndexList{0});
  CHECK(groups[1].point_indices == IndexList{2});
}

TEST_CASE("merged proposals drop duplicates and small groups") {
  Points3d coords(5, 3);
  coords << 0, 0, 0, 0.005, 0, 0, 0.04, 0, 0, 0.045, 0, 0, 1, 1, 1;
  Eigen::VectorXi labels = Eigen::VectorXi::Zero(5);
  PipelineConfig cfg;
  cfg.min_group_size = 2;
  const auto result = hierarchical_group(coords, labels, cfg);
  // rounds: {01}{23}{4} / same / {0123}{4}
  REQUIRE(result.merged.size() == 3);
  CHECK(result.merged[0].point_indices == IndexList{0, 1});
  CHECK(result.merged[0].round == 1);
  CHECK(result.merged[1].point_indices == IndexList{2, 3});
  CHECK(result.merged[2].point_indices == IndexList{0, 1, 2, 3});
  CHECK(result.merged[2].round == 3);
}

TEST_CASE("invalid inputs are rejected") {
  Points3d coords(2, 3);
  coords << 0, 0, 0, 1, 1, 1;
  Eigen::VectorXi labels = Eigen::VectorXi::Zero(2);
  PipelineConfig cfg;
  cfg.radii = {0.03, 0.03};
  CHECK_THROWS_AS(hierarchical_group(coords, labels, cfg), ValidationError);
  cfg.radii = {0.05, 0.03};
  CHECK_THROWS_AS(hierarchical_group(coords, labels, cfg), ValidationError);
  cfg.radii = {};
  CHECK_THROWS_AS(hierarchical_group(coords, labels, cfg), ValidationError);
  CHECK_THROWS_AS(cluster_round1(coords, Eigen::VectorXi::Zero(3), {}, 0.1), ValidationError);
  CHECK_THROWS_AS(cluster_round1(coords, labels, {}, 0.0), ValidationError);
  const std::vector<Group> overlapping{{{0, 1}, 0, 1}, {{1}, 0, 1}};
  CHECK_THROWS_AS(merge_round(overlapping, coords, 0.1, 0.2, 2), ValidationError);
  const std::vector<Group> fine{{{0}, 0, 1}, {{1}, 0, 1}};
  CHECK_THROWS_AS(merge_round(fine, coords, 0.2, 0.1, 2), ValidationError);
}

TEST_CASE("cloud overload chooses the coordinate space") {
  const ShiftedCloud* kNoShift = nullptr;
  PointCloud cloud;
  cloud.positions.resize(2, 3);
  cloud.positions << 0, 0, 0, 1, 0, 0;
  cloud.semantic_labels = Eigen::VectorXi::Zero(2);
  cloud.offsets = Points3d(2, 3);
  *cloud.offsets << 0.5, 0, 0, -0.5, 0, 0;
  PipelineConfig cfg;
  cfg.min_group_size = 1;
  cfg.cluster_space = ClusterSpace::kShifted;
  CHECK(hierarchical_group(cloud, kNoShift, cfg).rounds[0].size() == 1);
  cfg.cluster_space = ClusterSpace::kOriginal;
  CHECK(hierarchical_group(cloud, kNoShift, cfg).rounds[0].size() == 2);
  cloud.offsets.reset();
  cfg.cluster_space = ClusterSpace::kShifted;
  CHECK_THROWS_WITH_AS(hierarchical_group(cloud, kNoShift, cfg), "offsets required",
                       ValidationError);
}

TEST_CASE("single-precision grouping") {
  Points3<float> coords(3, 3);
  coords << 0.f, 0.f, 0.f, 0.008f, 0.f, 0.f, 0.5f, 0.f, 0.f;
  Eigen::VectorXi labels = Eigen::VectorXi::Zero(3);
  PipelineConfig cfg;
  cfg.min_group_size = 1;
  const auto result = hierarchical_group(coords, labels, cfg);
  CHECK(result.rounds[2].size() == 2);
}
