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
// Group refinement: ground-truth mask and score targets, mask application,
// mask-weighted feature pooling, and the mask/score predictor interface.

#ifndef HPGSEG_MASKSCORE_HPP_
#define HPGSEG_MASKSCORE_HPP_

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hpgseg/config.hpp"
#include "hpgseg/hpg.hpp"
#include "hpgseg/types.hpp"

namespace hpgseg {

struct MaskedInstance {
  Group group;
  Eigen::VectorXd mask_probs;
  IndexList kept_indices;
  double score = 0.0;
  std::optional<Eigen::VectorXd> pooled_feature;
};

struct GtMatch {
  int gt_id = -1;
  // Position of the matched instance in the input list.
  std::size_t position = 0;
  double iou = 0.0;
};

// Ground-truth instance with the largest point-set IoU; ties go to the
// lowest instance id.
GtMatch best_gt_instance(std::span<const int> points, std::span<const GroundTruthInstance> gts);

// 1 for each group member that belongs to `gt`, else 0.
Eigen::VectorXd gt_mask(const Group& group, const GroundTruthInstance& gt);

// Clamped linear ramp from cfg.score_iou_low (0) to cfg.score_iou_high (1).
double gt_score(double iou, const PipelineConfig& cfg);

// Mask-weighted mean of feature rows. Falls back to the unweighted mean when
// the mask mass is below 1e-8.
template <typename DerivedF, typename DerivedM>
Eigen::Matrix<typename DerivedF::Scalar, Eigen::Dynamic, 1> mask_pool(
    const Eigen::MatrixBase<DerivedF>& features, const Eigen::MatrixBase<DerivedM>& mask_probs) {
  using Scalar = typename DerivedF::Scalar;
  if (features.rows() == 0) throw ValidationError("mask_pool: empty input");
  if (features.rows() != mask_probs.size())
    throw ValidationError("mask_pool: features and mask differ in length");
  const Scalar mass = mask_probs.template cast<Scalar>().sum();
  if (mass < Scalar(1e-8)) return features.colwise().mean().transpose();
  return (features.transpose() * mask_probs.template cast<Scalar>()) / mass;
}

// Binarizes `mask_probs` (kept iff prob >= cfg.mask_binarize_threshold).
MaskedInstance apply_mask(const Group& group, const Eigen::VectorXd& mask_probs, double score,
                          const PipelineConfig& cfg);

struct MaskPrediction {
  Eigen::VectorXd mask_probs;
  double score = 0.0;
};

// Produces a per-member mask and a quality score for one group. `features`
// holds the group members' feature rows in member order. Implementations
// must be callable concurrently and deterministic.
class MaskPredictor {
 public:
  virtual ~MaskPredictor() = default;
  virtual MaskPrediction predict(const Group& group, const RowMatrixXd& features,
                                 const PointCloud& cloud) const = 0;
  virtual std::string name() const = 0;
};

// Mask is exact membership in the best-matching instance; score is the
// ramp target of the masked set's IoU with that instance.
class OracleExactPredictor : public MaskPredictor {
 public:
  OracleExactPredictor(std::vector<GroundTruthInstance> gts, PipelineConfig cfg);
  MaskPrediction predict(const Group& group, const RowMatrixXd& features,
                         const PointCloud& cloud) const override;
  std::string name() const override { return "exact"; }

 protected:
  std::vector<GroundTruthInstance> gts_;
  PipelineConfig cfg_;
};

// The exact oracle with each member's mask bit flipped with probability
// `mask_flip_rate` and Gaussian jitter on the score. Randomness is seeded
// per call from `seed` and the group's identity.
class OracleNoisyPredictor : public OracleExactPredictor {
 public:
  OracleNoisyPredictor(std::vector<GroundTruthInstance> gts, PipelineConfig cfg,
                       double mask_flip_rate, double score_jitter, std::uint64_t seed);
  MaskPrediction predict(const Group& group, const RowMatrixXd& features,
                         const PointCloud& cloud) const override;
  std::string name() const override { return "noisy"; }

 private:
  double mask_flip_rate_;
  double score_jitter_;
  std::uint64_t seed_;
};

// All-ones mask, score 1: grouping without refinement.
class ConstantPredictor : public MaskPredictor {
 public:
  MaskPrediction predict(const Group& group, const RowMatrixXd& features,
                         const PointCloud& cloud) const override;
  std::string name() const override { return "constant"; }
};

}  // namespace hpgseg

#endif  // HPGSEG_MASKSCORE_HPP_
