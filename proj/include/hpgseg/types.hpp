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
// Dense types shared by every module. Per-point arrays are row-major so that
// row i of any column block is the i-th point.

#ifndef HPGSEG_TYPES_HPP_
#define HPGSEG_TYPES_HPP_

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hpgseg/error.hpp"

namespace hpgseg {

template <typename Scalar>
using Points3 = Eigen::Matrix<Scalar, Eigen::Dynamic, 3, Eigen::RowMajor>;
template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;

using Points3d = Points3<double>;
using RowMatrixXd = RowMatrix<double>;

// Sorted, duplicate-free list of point indices.
using IndexList = std::vector<int>;

template <typename Scalar>
struct BasicPointCloud {
  Points3<Scalar> positions;
  std::optional<Points3<Scalar>> colors;
  std::optional<RowMatrix<Scalar>> semantic_scores;
  std::optional<Eigen::VectorXi> semantic_labels;
  std::optional<Points3<Scalar>> offsets;
  std::optional<RowMatrix<Scalar>> features;
  // -1 marks a point outside every ground-truth instance.
  std::optional<Eigen::VectorXi> gt_instance_ids;

  Eigen::Index size() const { return positions.rows(); }

  // Throws ValidationError when a column length differs from the point
  // count, positions are non-finite, or labels fall outside [0, C).
  void validate() const {
    const Eigen::Index n = size();
    if (n == 0) throw ValidationError("point cloud is empty");
    if (!positions.allFinite()) throw ValidationError("positions contain non-finite values");
    auto check_rows = [n](Eigen::Index rows, const char* name) {
      if (rows != n)
        throw ValidationError(std::string("column '") + name + "' has " + std::to_string(rows) +
                              " rows, expected " + std::to_string(n));
    };
    if (colors) {
      check_rows(colors->rows(), "colors");
      if (!colors->allFinite() || colors->minCoeff() < Scalar(0) || colors->maxCoeff() > Scalar(1))
        throw ValidationError("colors must lie in [0,1]");
    }
    if (semantic_scores) {
      check_rows(semantic_scores->rows(), "semantic_scores");
      if (semantic_scores->cols() == 0) throw ValidationError("semantic_scores has zero classes");
    }
    if (semantic_labels) {
      check_rows(semantic_labels->size(), "semantic_labels");
      if (semantic_labels->minCoeff() < 0)
        throw ValidationError("semantic_labels must be non-negative");
      if (semantic_scores && semantic_labels->maxCoeff() >= semantic_scores->cols())
        throw ValidationError("semantic_labels exceed the class count");
    }
    if (offsets) {
      check_rows(offsets->rows(), "offsets");
      if (!offsets->allFinite()) throw ValidationError("offsets contain non-finite values");
    }
    if (features) check_rows(features->rows(), "features");
    if (gt_instance_ids) {
      check_rows(gt_instance_ids->size(), "gt_instance_ids");
      if (gt_instance_ids->minCoeff() < -1) throw ValidationError("gt_instance_ids must be >= -1");
    }
  }
};

using PointCloud = BasicPointCloud<double>;

// Per-point estimated instance centroids, centroids = positions + offsets.
template <typename Scalar>
struct BasicShiftedCloud {
  Points3<Scalar> centroids;
};

using ShiftedCloud = BasicShiftedCloud<double>;

struct GroundTruthInstance {
  int id = 0;
  int semantic_class = 0;
  IndexList point_indices;
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
};

}  // namespace hpgseg

#endif  // HPGSEG_TYPES_HPP_
