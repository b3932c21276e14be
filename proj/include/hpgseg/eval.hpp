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
// Instance segmentation metrics. Predictions are matched greedily in
// descending confidence to the unmatched same-class ground-truth instance of
// highest IoU; AP is the area under the all-point interpolated
// precision/recall curve. Batches pool the ranked matches of every scene per
// class before computing AP.

#ifndef HPGSEG_EVAL_HPP_
#define HPGSEG_EVAL_HPP_

#include <map>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "hpgseg/inference.hpp"
#include "hpgseg/types.hpp"
#include "json.hpp"

namespace hpgseg {

struct Match {
  // Index into the input prediction list.
  std::size_t prediction = 0;
  std::optional<int> gt_id;
  double iou = 0.0;
};

// One entry per prediction, in matching (descending confidence) order.
std::vector<Match> match_predictions(std::span<const Prediction> preds,
                                     std::span<const GroundTruthInstance> gts,
                                     double iou_threshold);

// `ranked_hits[k]` tells whether the k-th ranked prediction is a true
// positive. 1 when there are neither predictions nor ground truth; 0 when
// only one side is empty.
double average_precision(const std::vector<bool>& ranked_hits, std::size_t num_gt);

// 0.50, 0.55, ..., 0.95
std::vector<double> ap_thresholds();

struct ClassMetrics {
  double ap = 0;
  double ap50 = 0;
  double ap25 = 0;
  double precision50 = 0;
  double recall50 = 0;
  std::size_t num_gt = 0;
  std::size_t num_pred = 0;
};

struct EvalReport {
  double ap = 0;
  double ap50 = 0;
  double ap25 = 0;
  double mprec50 = 0;
  double mrec50 = 0;
  std::map<int, ClassMetrics> per_class;
};

struct SceneInstances {
  std::vector<Prediction> predictions;
  std::vector<GroundTruthInstance> ground_truth;
};

// Classes with neither predictions nor ground truth are left out of the
// means; if every class is left out, all metrics are 1.
EvalReport evaluate(std::span<const Prediction> preds, std::span<const GroundTruthInstance> gts,
                    const std::set<int>& classes);

EvalReport evaluate_batch(std::span<const SceneInstances> scenes, const std::set<int>& classes);

nlohmann::json to_json(const EvalReport& report);

// class,ap,ap50,ap25,precision50,recall50,num_gt,num_pred
std::string per_class_csv(const EvalReport& report);

}  // namespace hpgseg

#endif  // HPGSEG_EVAL_HPP_
