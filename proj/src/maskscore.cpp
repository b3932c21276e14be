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

#include "hpgseg/maskscore.hpp"

#include <algorithm>
#include <random>

#include "hpgseg/point_set.hpp"
#include "hpgseg/random.hpp"

namespace hpgseg {

GtMatch best_gt_instance(std::span<const int> points, std::span<const GroundTruthInstance> gts) {
  if (gts.empty()) throw ValidationError("best_gt_instance: no ground-truth instances");
  GtMatch best;
  for (std::size_t k = 0; k < gts.size(); ++k) {
    const double iou = set_iou(points, gts[k].point_indices);
    if (best.gt_id == -1 || iou > best.iou || (iou == best.iou && gts[k].id < best.gt_id)) {
      best = {gts[k].id, k, iou};
    }
  }
  return best;
}

Eigen::VectorXd gt_mask(const Group& group, const GroundTruthInstance& gt) {
  const auto& members = group.point_indices;
  Eigen::VectorXd mask(static_cast<Eigen::Index>(members.size()));
  for (std::size_t j = 0; j < members.size(); ++j)
    mask(static_cast<Eigen::Index>(j)) =
        std::binary_search(gt.point_indices.begin(), gt.point_indices.end(), members[j]) ? 1.0
                                                                                         : 0.0;
  return mask;
}

double gt_score(double iou, const PipelineConfig& cfg) {
  const double t = (iou - cfg.score_iou_low) / (cfg.score_iou_high - cfg.score_iou_low);
  return std::clamp(t, 0.0, 1.0);
}

MaskedInstance apply_mask(const Group& group, const Eigen::VectorXd& mask_probs, double score,
                          const PipelineConfig& cfg) {
  if (mask_probs.size() != static_cast<Eigen::Index>(group.point_indices.size()))
    throw ValidationError("apply_mask: mask length differs from group size");
  MaskedInstance inst;
  inst.group = group;
  inst.mask_probs = mask_probs;
  inst.score = score;
  for (std::size_t j = 0; j < group.point_indices.size(); ++j)
    if (mask_probs(static_cast<Eigen::Index>(j)) >= cfg.mask_binarize_threshold)
      inst.kept_indices.push_back(group.point_indices[j]);
  return inst;
}

namespace {

IndexList kept_by(const Group& group, const Eigen::VectorXd& mask, double threshold) {
  IndexList kept;
  for (std::size_t j = 0; j < group.point_indices.size(); ++j)
    if (mask(static_cast<Eigen::Index>(j)) >= threshold) kept.push_back(group.point_indices[j]);
  return kept;
}

}  // namespace

OracleExactPredictor::OracleExactPredictor(std::vector<GroundTruthInstance> gts, PipelineConfig cfg)
    : gts_(std::move(gts)), cfg_(std::move(cfg)) {}

MaskPrediction OracleExactPredictor::predict(const Group& group, const RowMatrixXd&,
                                             const PointCloud&) const {
  if (gts_.empty())
    return {Eigen::VectorXd::Zero(static_cast<Eigen::Index>(group.point_indices.size())), 0.0};
  const GtMatch match = best_gt_instance(group.point_indices, gts_);
  const GroundTruthInstance& gt = gts_[match.position];
  MaskPrediction out;
  out.mask_probs = gt_mask(group, gt);
  out.score = gt_score(
      set_iou(kept_by(group, out.mask_probs, cfg_.mask_binarize_threshold), gt.point_indices),
      cfg_);
  return out;
}

OracleNoisyPredictor::OracleNoisyPredictor(std::vector<GroundTruthInstance> gts, PipelineConfig cfg,
                                           double mask_flip_rate, double score_jitter,
                                           std::uint64_t seed)
    : OracleExactPredictor(std::move(gts), std::move(cfg)),
      mask_flip_rate_(mask_flip_rate),
      score_jitter_(score_jitter),
      seed_(seed) {
  if (!(mask_flip_rate_ >= 0 && mask_flip_rate_ < 1))
    throw ValidationError("mask_flip_rate: must lie in [0, 1)");
  if (!(score_jitter_ >= 0)) throw ValidationError("score_jitter: must be >= 0");
}

MaskPrediction OracleNoisyPredictor::predict(const Group& group, const RowMatrixXd& features,
                                             const PointCloud& cloud) const {
  MaskPrediction out = OracleExactPredictor::predict(group, features, cloud);
  Rng rng(derive_seed(
      seed_,
      {static_cast<std::uint64_t>(group.round), static_cast<std::uint64_t>(group.semantic_class),
       static_cast<std::uint64_t>(group.point_indices.front()), group.point_indices.size()}));
  std::bernoulli_distribution flip(mask_flip_rate_);
  for (Eigen::Index j = 0; j < out.mask_probs.size(); ++j)
    if (flip(rng)) out.mask_probs(j) = 1.0 - out.mask_probs(j);
  if (!gts_.empty()) {
    const GtMatch match = best_gt_instance(group.point_indices, gts_);
    out.score = gt_score(set_iou(kept_by(group, out.mask_probs, cfg_.mask_binarize_threshold),
                                 gts_[match.position].point_indices),
                         cfg_);
  }
  if (score_jitter_ > 0) {
    std::normal_distribution<double> jitter(0.0, score_jitter_);
    out.score = std::clamp(out.score + jitter(rng), 0.0, 1.0);
  }
  return out;
}

MaskPrediction ConstantPredictor::predict(const Group& group, const RowMatrixXd&,
                                          const PointCloud&) const {
  return {Eigen::VectorXd::Ones(static_cast<Eigen::Index>(group.point_indices.size())), 1.0};
}

}  // namespace hpgseg
