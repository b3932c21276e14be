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
// Synthetic scenes with exact ground truth, and simulated network outputs
// (offsets, semantic scores, features) with controlled corruption.

#ifndef HPGSEG_SYNTH_HPP_
#define HPGSEG_SYNTH_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "hpgseg/types.hpp"
#include "json.hpp"

namespace hpgseg {

enum class ShapeKind { kBox, kSphere };

struct Range {
  double min = 0;
  double max = 0;
};

struct IntRange {
  int min = 0;
  int max = 0;
};

// Instances are hollow surfaces (box faces or sphere shells) sampled on a
// jittered lattice whose nearest-neighbor distance never exceeds
// intra_spacing, so every instance is one connected component at any radius
// above it. Placement keeps axis-aligned bounding boxes at least min_gap
// apart, which bounds the closest cross-instance point pair from below.
struct SceneSpec {
  int num_instances = 4;
  std::vector<int> classes{0, 1};
  ShapeKind shape = ShapeKind::kBox;
  // Lower bound raises lattice density; upper bound shrinks the instance.
  IntRange points_per_instance{50, 5000};
  // Box side or sphere diameter, meters.
  Range instance_extent{0.1, 0.2};
  double min_gap = 0.1;
  double intra_spacing = 0.008;
  Eigen::Vector3d bounds_min{0, 0, 0};
  Eigen::Vector3d bounds_max{2, 2, 1};
  std::uint64_t seed = 0;

  void validate() const;
};

struct NoiseSpec {
  double offset_sigma = 0.0;
  double semantic_flip_rate = 0.0;
  double mask_flip_rate = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Scene {
  PointCloud cloud;
  std::vector<GroundTruthInstance> instances;
};

// Throws ValidationError if the instances cannot be packed after 10^4
// placement attempts per instance.
Scene generate_scene(const SceneSpec& spec);

// Returns a copy of `cloud` with offsets toward the instance centroids plus
// isotropic Gaussian noise, semantic labels flipped to a random other class
// at the given rate, confident one-hot class scores of the final labels, and
// features [x y z | one-hot label]. The class count is one past the largest
// ground-truth class.
PointCloud simulate_predictions(const PointCloud& cloud,
                                const std::vector<GroundTruthInstance>& gts,
                                const NoiseSpec& noise);

// Logit given to the chosen class in simulated scores; others get 0.
inline constexpr double kSimulatedLogit = 30.0;

nlohmann::json to_json(const SceneSpec& spec);
nlohmann::json to_json(const NoiseSpec& noise);
// Field paths in error messages are prefixed by `where`.
SceneSpec scene_spec_from_json(const nlohmann::json& doc, const std::string& where = "scene");
NoiseSpec noise_spec_from_json(const nlohmann::json& doc, const std::string& where = "noise");

}  // namespace hpgseg

#endif  // HPGSEG_SYNTH_HPP_
