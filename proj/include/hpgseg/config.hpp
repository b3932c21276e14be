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

#ifndef HPGSEG_CONFIG_HPP_
#define HPGSEG_CONFIG_HPP_

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

namespace hpgseg {

enum class ClusterSpace { kShifted, kOriginal };

std::string to_string(ClusterSpace space);
ClusterSpace cluster_space_from_string(const std::string& name);

struct PipelineConfig {
  // Strictly increasing clustering radii, meters; one grouping round each.
  std::vector<double> radii{0.01, 0.03, 0.05};
  // Groups with fewer points are discarded after grouping.
  int min_group_size = 50;
  double nms_iou = 0.7;
  ClusterSpace cluster_space = ClusterSpace::kShifted;
  double mask_binarize_threshold = 0.5;
  std::set<int> ignored_classes;
  // Linear ramp mapping IoU to the score target.
  double score_iou_low = 0.25;
  double score_iou_high = 0.75;
  std::uint64_t rng_seed = 0;
  // Optional voxel quantization before grouping; 0 disables it.
  double voxel_size = 0.0;

  // Throws ValidationError naming the offending field.
  void validate() const;
};

nlohmann::json to_json(const PipelineConfig& cfg);

// Missing keys keep their defaults; unknown keys are rejected.
PipelineConfig config_from_json(const nlohmann::json& doc);

}  // namespace hpgseg

#endif  // HPGSEG_CONFIG_HPP_
