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

#ifndef HPGSEG_INFERENCE_HPP_
#define HPGSEG_INFERENCE_HPP_

#include <vector>

#include "hpgseg/config.hpp"
#include "hpgseg/hpg.hpp"
#include "hpgseg/maskscore.hpp"
#include "hpgseg/types.hpp"

namespace hpgseg {

struct Prediction {
  IndexList point_indices;
  int semantic_class = 0;
  double confidence = 0.0;

  friend bool operator==(const Prediction&, const Prediction&) = default;
};

// Greedy score-ordered suppression on masked point sets. Order: score
// descending, then larger kept set, then lower smallest kept index, then
// input order. An instance survives iff its IoU with every survivor so far
// is below `iou_threshold`. Instances with empty kept sets are dropped.
std::vector<Prediction> nms(const std::vector<MaskedInstance>& instances, double iou_threshold);

struct StageTimings {
  double shift_ms = 0;
  double group_ms = 0;
  double mask_ms = 0;
  double nms_ms = 0;
  double total_ms() const { return shift_ms + group_ms + mask_ms + nms_ms; }
};

struct Segmentation {
  std::vector<Prediction> predictions;
  std::vector<std::size_t> groups_per_round;
  std::size_t num_proposals = 0;
  std::size_t num_masked = 0;
  StageTimings timings;
};

// shift -> group -> predict masks and scores -> binarize -> NMS. Without
// per-point features the positions stand in for them.
Segmentation segment_scene(const PointCloud& cloud, const MaskPredictor& predictor,
                           const PipelineConfig& cfg);

}  // namespace hpgseg

#endif  // HPGSEG_INFERENCE_HPP_
