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
// Loss evaluators for the segmentation heads:
//   semantic   mean softmax cross-entropy over points
//   offset     per-instance mean of ||d_i + mu_i - c||, averaged over instances
//   direction  negative per-instance mean cosine between d_i and c - mu_i
//   mask       per-group mean binary cross-entropy, averaged over groups
//   score      mean binary cross-entropy over groups
//   total      unweighted sum of the five
// All reductions use compensated summation.

#ifndef HPGSEG_LOSSES_HPP_
#define HPGSEG_LOSSES_HPP_

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "hpgseg/types.hpp"

namespace hpgseg {

// Neumaier compensated accumulator.
template <typename Scalar>
class CompensatedSum {
 public:
  void add(Scalar x) {
    const Scalar t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  Scalar value() const { return sum_ + comp_; }

 private:
  Scalar sum_ = 0;
  Scalar comp_ = 0;
};

struct LossReport {
  double sem = 0;
  double off = 0;
  double dir = 0;
  double mask = 0;
  double score = 0;
  double total = 0;
};

inline constexpr double kProbabilityEpsilon = 1e-12;

template <typename DerivedS>
typename DerivedS::Scalar semantic_loss(const Eigen::MatrixBase<DerivedS>& scores,
                                        const Eigen::VectorXi& gt_labels) {
  using Scalar = typename DerivedS::Scalar;
  if (scores.rows() != gt_labels.size())
    throw ValidationError("semantic_loss: scores and labels differ in length");
  if (scores.rows() == 0) throw ValidationError("semantic_loss: no points");
  CompensatedSum<Scalar> acc;
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    const int label = gt_labels(i);
    if (label < 0 || label >= scores.cols())
      throw ValidationError("semantic_loss: label " + std::to_string(label) + " out of range");
    const auto row = scores.row(i);
    const Scalar peak = row.maxCoeff();
    const Scalar lse = peak + std::log((row.array() - peak).exp().sum());
    acc.add(lse - row(label));
  }
  return acc.value() / Scalar(scores.rows());
}

namespace detail {

inline void require_instances(std::span<const GroundTruthInstance> gts, const char* who) {
  if (gts.empty()) throw ValidationError(std::string(who) + ": no ground-truth instances");
}

template <typename DerivedO, typename DerivedP>
void check_member(const Eigen::MatrixBase<DerivedO>& offsets,
                  const Eigen::MatrixBase<DerivedP>& positions, int i, const char* who) {
  if (offsets.rows() != positions.rows())
    throw ValidationError(std::string(who) + ": offsets and positions differ in length");
  if (i < 0 || i >= positions.rows())
    throw ValidationError(std::string(who) + ": instance member " + std::to_string(i) +
                          " outside the cloud");
}

}  // namespace detail

template <typename DerivedO, typename DerivedP>
typename DerivedO::Scalar offset_loss(const Eigen::MatrixBase<DerivedO>& offsets,
                                      const Eigen::MatrixBase<DerivedP>& positions,
                                      std::span<const GroundTruthInstance> gts) {
  using Scalar = typename DerivedO::Scalar;
  detail::require_instances(gts, "offset_loss");
  CompensatedSum<Scalar> outer;
  for (const GroundTruthInstance& gt : gts) {
    const Vector3<Scalar> c = gt.centroid.template cast<Scalar>();
    CompensatedSum<Scalar> inner;
    for (int i : gt.point_indices) {
      detail::check_member(offsets, positions, i, "offset_loss");
      inner.add((offsets.row(i) - (c.transpose() - positions.row(i))).norm());
    }
    outer.add(inner.value() / Scalar(gt.point_indices.size()));
  }
  return outer.value() / Scalar(gts.size());
}

// Points whose offset or centroid direction has norm below 1e-8 are skipped;
// an instance with no remaining points is skipped as well.
template <typename DerivedO, typename DerivedP>
typename DerivedO::Scalar direction_loss(const Eigen::MatrixBase<DerivedO>& offsets,
                                         const Eigen::MatrixBase<DerivedP>& positions,
                                         std::span<const GroundTruthInstance> gts) {
  using Scalar = typename DerivedO::Scalar;
  detail::require_instances(gts, "direction_loss");
  const Scalar tiny(1e-8);
  CompensatedSum<Scalar> outer;
  std::size_t counted = 0;
  for (const GroundTruthInstance& gt : gts) {
    const Vector3<Scalar> c = gt.centroid.template cast<Scalar>();
    CompensatedSum<Scalar> inner;
    std::size_t valid = 0;
    for (int i : gt.point_indices) {
      detail::check_member(offsets, positions, i, "direction_loss");
      const Vector3<Scalar> d = offsets.row(i).transpose();
      const Vector3<Scalar> to_center = c - positions.row(i).transpose();
      const Scalar nd = d.norm();
      const Scalar nc = to_center.norm();
      if (nd < tiny || nc < tiny) continue;
      inner.add(d.dot(to_center) / (nd * nc));
      ++valid;
    }
    if (valid == 0) continue;
    outer.add(inner.value() / Scalar(valid));
    ++counted;
  }
  if (counted == 0) return Scalar(0);
  return -outer.value() / Scalar(counted);
}

namespace detail {

template <typename Scalar>
Scalar binary_cross_entropy(Scalar target, Scalar prob) {
  const Scalar eps(kProbabilityEpsilon);
  const Scalar p = std::clamp(prob, eps, Scalar(1) - eps);
  return -(target * std::log(p) + (Scalar(1) - target) * std::log(Scalar(1) - p));
}

}  // namespace detail

template <typename Scalar>
Scalar mask_loss(const std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>& masks,
                 const std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>& gt_masks) {
  if (masks.size() != gt_masks.size()) throw ValidationError("mask_loss: group counts differ");
  if (masks.empty()) throw ValidationError("mask_loss: no groups");
  CompensatedSum<Scalar> outer;
  for (std::size_t g = 0; g < masks.size(); ++g) {
    if (masks[g].size() != gt_masks[g].size() || masks[g].size() == 0)
      throw ValidationError("mask_loss: group " + std::to_string(g) +
                            " has mismatched or empty mask");
    CompensatedSum<Scalar> inner;
    for (Eigen::Index i = 0; i < masks[g].size(); ++i)
      inner.add(detail::binary_cross_entropy(gt_masks[g](i), masks[g](i)));
    outer.add(inner.value() / Scalar(masks[g].size()));
  }
  return outer.value() / Scalar(masks.size());
}

template <typename DerivedE, typename DerivedT>
typename DerivedE::Scalar score_loss(const Eigen::MatrixBase<DerivedE>& scores,
                                     const Eigen::MatrixBase<DerivedT>& gt_scores) {
  using Scalar = typename DerivedE::Scalar;
  if (scores.size() != gt_scores.size()) throw ValidationError("score_loss: lengths differ");
  if (scores.size() == 0) throw ValidationError("score_loss: no groups");
  CompensatedSum<Scalar> acc;
  for (Eigen::Index i = 0; i < scores.size(); ++i)
    acc.add(detail::binary_cross_entropy(Scalar(gt_scores(i)), Scalar(scores(i))));
  return acc.value() / Scalar(scores.size());
}

// Fills `total` with sem + off + dir + mask + score.
inline LossReport total_loss(LossReport parts) {
  for (double v : {parts.sem, parts.off, parts.dir, parts.mask, parts.score})
    if (!std::isfinite(v)) throw ValidationError("total_loss: non-finite loss term");
  parts.total = parts.sem + parts.off + parts.dir + parts.mask + parts.score;
  return parts;
}

}  // namespace hpgseg

#endif  // HPGSEG_LOSSES_HPP_
