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

#include "hpgseg/inference.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>

#include "hpgseg/cloud.hpp"
#include "hpgseg/point_set.hpp"

namespace hpgseg {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

}  // namespace

std::vector<Prediction> nms(const std::vector<MaskedInstance>& instances, double iou_threshold) {
  if (!(iou_threshold > 0 && iou_threshold <= 1))
    throw ValidationError("nms: IoU threshold must lie in (0, 1]");
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < instances.size(); ++i)
    if (!instances[i].kept_indices.empty()) order.push_back(i);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const MaskedInstance& x = instances[a];
    const MaskedInstance& y = instances[b];
    if (x.score != y.score) return x.score > y.score;
    if (x.kept_indices.size() != y.kept_indices.size())
      return x.kept_indices.size() > y.kept_indices.size();
    return x.kept_indices.front() < y.kept_indices.front();
  });
  std::vector<Prediction> kept;
  for (std::size_t i : order) {
    const MaskedInstance& cand = instances[i];
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const Prediction& p) {
      return set_iou(cand.kept_indices, p.point_indices) >= iou_threshold;
    });
    if (!suppressed) kept.push_back({cand.kept_indices, cand.group.semantic_class, cand.score});
  }
  return kept;
}

Segmentation segment_scene(const PointCloud& cloud, const MaskPredictor& predictor,
                           const PipelineConfig& cfg) {
  cfg.validate();
  cloud.validate();
  Segmentation out;

  auto t0 = Clock::now();
  std::optional<ShiftedCloud> shifted;
  if (cfg.cluster_space == ClusterSpace::kShifted) shifted = shift_points(cloud);
  out.timings.shift_ms = elapsed_ms(t0);

  t0 = Clock::now();
  const GroupingResult grouping = hierarchical_group(cloud, shifted ? &*shifted : nullptr, cfg);
  out.timings.group_ms = elapsed_ms(t0);
  for (const auto& round : grouping.rounds) out.groups_per_round.push_back(round.size());
  out.num_proposals = grouping.merged.size();

  t0 = Clock::now();
  const RowMatrixXd& all_features = cloud.features ? *cloud.features : RowMatrixXd(cloud.positions);
  std::vector<MaskedInstance> masked;
  masked.reserve(grouping.merged.size());
  for (const Group& group : grouping.merged) {
    const Eigen::VectorXi rows = Eigen::Map<const Eigen::VectorXi>(
        group.point_indices.data(), static_cast<Eigen::Index>(group.point_indices.size()));
    const RowMatrixXd group_features = all_features(rows, Eigen::all);
    MaskPrediction pred = predictor.predict(group, group_features, cloud);
    if (pred.mask_probs.size() != rows.size())
      throw InvariantError("predictor '" + predictor.name() +
                           "' returned a mask of the wrong length");
    if (!(pred.score >= 0 && pred.score <= 1) ||
        (pred.mask_probs.size() > 0 &&
         (pred.mask_probs.minCoeff() < 0 || pred.mask_probs.maxCoeff() > 1)))
      throw InvariantError("predictor '" + predictor.name() + "' output outside [0,1]");
    MaskedInstance inst = apply_mask(group, pred.mask_probs, pred.score, cfg);
    inst.pooled_feature = mask_pool(group_features, pred.mask_probs);
    if (!inst.kept_indices.empty()) masked.push_back(std::move(inst));
  }
  out.num_masked = masked.size();
  out.timings.mask_ms = elapsed_ms(t0);

  t0 = Clock::now();
  out.predictions = nms(masked, cfg.nms_iou);
  out.timings.nms_ms = elapsed_ms(t0);
  return out;
}

}  // namespace hpgseg
