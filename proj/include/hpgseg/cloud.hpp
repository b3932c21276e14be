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
// Whole-cloud operations: label derivation, centroid shifting, voxel
// quantization, ground-truth instance extraction.

#ifndef HPGSEG_CLOUD_HPP_
#define HPGSEG_CLOUD_HPP_

#include <algorithm>
#include <map>
#include <unordered_map>
#include <vector>

#include "hpgseg/spatial.hpp"
#include "hpgseg/types.hpp"

namespace hpgseg {

// Row-wise argmax; ties go to the lowest class id.
template <typename Derived>
Eigen::VectorXi argmax_labels(const Eigen::MatrixBase<Derived>& scores) {
  Eigen::VectorXi labels(scores.rows());
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < scores.cols(); ++c)
      if (scores(i, c) > scores(i, best)) best = c;
    labels(i) = static_cast<int>(best);
  }
  return labels;
}

// Explicit labels when present, otherwise the argmax of the class scores.
template <typename Scalar>
Eigen::VectorXi semantic_labels_of(const BasicPointCloud<Scalar>& cloud) {
  if (cloud.semantic_labels) return *cloud.semantic_labels;
  if (cloud.semantic_scores) return argmax_labels(*cloud.semantic_scores);
  throw ValidationError("semantic labels required (neither 'sem' labels nor scores present)");
}

template <typename Scalar>
BasicShiftedCloud<Scalar> shift_points(const BasicPointCloud<Scalar>& cloud) {
  if (!cloud.offsets) throw ValidationError("offsets required");
  if (cloud.offsets->rows() != cloud.positions.rows())
    throw ValidationError("offsets length differs from positions");
  return {cloud.positions + *cloud.offsets};
}

// Indices of the points a voxel_downsample keeps, ascending. One point per
// occupied voxel: the one closest to the voxel center, ties by lowest index.
template <typename Derived>
IndexList voxel_representatives(const Eigen::MatrixBase<Derived>& positions,
                                typename Derived::Scalar voxel_size) {
  using Scalar = typename Derived::Scalar;
  if (!(voxel_size > Scalar(0))) throw ValidationError("voxel size must be positive");
  struct Best {
    int index;
    Scalar dist2;
  };
  std::unordered_map<CellKey, Best, CellKeyHash> best;
  best.reserve(static_cast<std::size_t>(positions.rows()));
  for (Eigen::Index i = 0; i < positions.rows(); ++i) {
    const CellKey key = cell_of(positions.row(i), voxel_size);
    Vector3<Scalar> center;
    for (int d = 0; d < 3; ++d) center(d) = (Scalar(key[d]) + Scalar(0.5)) * voxel_size;
    const Scalar d2 = (positions.row(i).transpose() - center).squaredNorm();
    auto [it, inserted] = best.try_emplace(key, Best{static_cast<int>(i), d2});
    if (!inserted && d2 < it->second.dist2) it->second = {static_cast<int>(i), d2};
  }
  IndexList kept;
  kept.reserve(best.size());
  for (const auto& [key, b] : best) kept.push_back(b.index);
  std::sort(kept.begin(), kept.end());
  return kept;
}

// Row subset of every present column.
template <typename Scalar>
BasicPointCloud<Scalar> select_points(const BasicPointCloud<Scalar>& cloud, const IndexList& rows) {
  const Eigen::VectorXi idx =
      Eigen::Map<const Eigen::VectorXi>(rows.data(), static_cast<Eigen::Index>(rows.size()));
  BasicPointCloud<Scalar> out;
  out.positions = cloud.positions(idx, Eigen::all);
  if (cloud.colors) out.colors = (*cloud.colors)(idx, Eigen::all);
  if (cloud.semantic_scores) out.semantic_scores = (*cloud.semantic_scores)(idx, Eigen::all);
  if (cloud.semantic_labels) out.semantic_labels = (*cloud.semantic_labels)(idx);
  if (cloud.offsets) out.offsets = (*cloud.offsets)(idx, Eigen::all);
  if (cloud.features) out.features = (*cloud.features)(idx, Eigen::all);
  if (cloud.gt_instance_ids) out.gt_instance_ids = (*cloud.gt_instance_ids)(idx);
  return out;
}

template <typename Scalar>
BasicPointCloud<Scalar> voxel_downsample(const BasicPointCloud<Scalar>& cloud, Scalar voxel_size) {
  return select_points(cloud, voxel_representatives(cloud.positions, voxel_size));
}

template <typename Derived>
GroundTruthInstance make_gt_instance(int id, int semantic_class, IndexList indices,
                                     const Eigen::MatrixBase<Derived>& positions) {
  std::sort(indices.begin(), indices.end());
  indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
  if (indices.empty())
    throw ValidationError("ground-truth instance " + std::to_string(id) + " is empty");
  GroundTruthInstance gt;
  gt.id = id;
  gt.semantic_class = semantic_class;
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  for (int i : indices) {
    if (i < 0 || i >= positions.rows())
      throw ValidationError("ground-truth instance " + std::to_string(id) + " references point " +
                            std::to_string(i) + " outside the cloud");
    sum += positions.row(i).transpose().template cast<double>();
  }
  gt.centroid = sum / static_cast<double>(indices.size());
  gt.point_indices = std::move(indices);
  return gt;
}

// Builds instances from the per-point instance ids. The class of each
// instance is the most frequent label among its points (lowest on ties).
template <typename Scalar>
std::vector<GroundTruthInstance> gt_instances_from_ids(const BasicPointCloud<Scalar>& cloud,
                                                       const Eigen::VectorXi& class_labels) {
  if (!cloud.gt_instance_ids) throw ValidationError("instance ids ('inst') required");
  const Eigen::VectorXi& ids = *cloud.gt_instance_ids;
  if (class_labels.size() != ids.size())
    throw ValidationError("class labels length differs from instance ids");
  std::map<int, IndexList> members;
  for (Eigen::Index i = 0; i < ids.size(); ++i)
    if (ids(i) >= 0) members[ids(i)].push_back(static_cast<int>(i));
  std::vector<GroundTruthInstance> out;
  for (auto& [id, indices] : members) {
    std::map<int, int> votes;
    for (int i : indices) ++votes[class_labels(i)];
    int best_class = votes.begin()->first;
    for (const auto& [c, n] : votes)
      if (n > votes[best_class]) best_class = c;
    out.push_back(make_gt_instance(id, best_class, std::move(indices), cloud.positions));
  }
  return out;
}

}  // namespace hpgseg

#endif  // HPGSEG_CLOUD_HPP_
