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
// Fixed-radius neighbor search over a uniform grid hash.

#ifndef HPGSEG_SPATIAL_HPP_
#define HPGSEG_SPATIAL_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hpgseg/types.hpp"

namespace hpgseg {

using CellKey = std::array<std::int64_t, 3>;

struct CellKeyHash {
  std::size_t operator()(const CellKey& k) const noexcept {
    // splitmix-style mixing of the three coordinates
    std::uint64_t h = 0x9e3779b97f4a7c15ull;
    for (std::int64_t c : k) {
      std::uint64_t z = static_cast<std::uint64_t>(c) + h;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
      h ^= z ^ (z >> 31);
      h *= 0x100000001b3ull;
    }
    return static_cast<std::size_t>(h);
  }
};

namespace detail {

template <typename Scalar>
std::int64_t floor_to_cell(Scalar coordinate, Scalar cell_size) {
  const Scalar q = std::floor(coordinate / cell_size);
  constexpr Scalar kLimit = Scalar(std::int64_t{1} << 60);
  if (!(q > -kLimit && q < kLimit))
    throw ValidationError("coordinate too large for grid cell size");
  return static_cast<std::int64_t>(q);
}

}  // namespace detail

template <typename Scalar, typename Derived>
CellKey cell_of(const Eigen::MatrixBase<Derived>& p, Scalar cell_size) {
  return {detail::floor_to_cell<Scalar>(p(0), cell_size),
          detail::floor_to_cell<Scalar>(p(1), cell_size),
          detail::floor_to_cell<Scalar>(p(2), cell_size)};
}

// The single distance predicate used everywhere a radius test occurs:
// squared Euclidean distance strictly below radius squared. Spelled out
// component-wise so every caller evaluates the identical expression.
// Coincident points pass for any positive radius, even one whose square
// underflows.
template <typename DerivedA, typename DerivedB, typename Scalar>
inline bool within_radius(const Eigen::MatrixBase<DerivedA>& a,
                          const Eigen::MatrixBase<DerivedB>& b, Scalar radius) {
  const Scalar dx = Scalar(a(0)) - Scalar(b(0));
  const Scalar dy = Scalar(a(1)) - Scalar(b(1));
  const Scalar dz = Scalar(a(2)) - Scalar(b(2));
  const Scalar d2 = dx * dx + dy * dy + dz * dz;
  return d2 < radius * radius || (d2 == Scalar(0) && radius > Scalar(0));
}

// Immutable uniform grid over a copy of the input points. Cells are stored
// in ascending key order; each cell's index list is ascending.
template <typename Scalar>
class GridIndex {
 public:
  GridIndex(Points3<Scalar> points, Scalar cell_size)
      : points_(std::move(points)), cell_size_(cell_size) {
    if (!(cell_size_ > Scalar(0)) || !std::isfinite(cell_size_))
      throw ValidationError("grid cell size must be positive");
    if (!points_.allFinite()) throw ValidationError("grid points must be finite");
    const Eigen::Index n = points_.rows();
    std::vector<std::pair<CellKey, int>> keyed(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i)
      keyed[static_cast<std::size_t>(i)] = {cell_of(points_.row(i), cell_size_),
                                            static_cast<int>(i)};
    std::sort(keyed.begin(), keyed.end());
    order_.resize(keyed.size());
    for (std::size_t i = 0; i < keyed.size(); ++i) {
      order_[i] = keyed[i].second;
      if (i == 0 || keyed[i].first != keyed[i - 1].first) {
        keys_.push_back(keyed[i].first);
        starts_.push_back(static_cast<int>(i));
      }
    }
    starts_.push_back(static_cast<int>(order_.size()));
    lookup_.reserve(keys_.size());
    for (std::size_t c = 0; c < keys_.size(); ++c) lookup_.emplace(keys_[c], c);
  }

  Scalar cell_size() const { return cell_size_; }
  std::size_t point_count() const { return order_.size(); }
  std::size_t num_cells() const { return keys_.size(); }
  const Points3<Scalar>& points() const { return points_; }

  const CellKey& cell_key(std::size_t c) const { return keys_[c]; }
  std::span<const int> cell_members(std::size_t c) const {
    return {order_.data() + starts_[c], static_cast<std::size_t>(starts_[c + 1] - starts_[c])};
  }

  // Slot of the cell with this key, or num_cells() if unoccupied.
  std::size_t find_cell(const CellKey& key) const {
    auto it = lookup_.find(key);
    return it == lookup_.end() ? keys_.size() : it->second;
  }

  std::span<const int> cell(const CellKey& key) const {
    const std::size_t c = find_cell(key);
    if (c == keys_.size()) return {};
    return cell_members(c);
  }

 private:
  Points3<Scalar> points_;
  Scalar cell_size_;
  std::vector<int> order_;
  std::vector<CellKey> keys_;
  std::vector<int> starts_;
  std::unordered_map<CellKey, std::size_t, CellKeyHash> lookup_;
};

template <typename Derived>
GridIndex<typename Derived::Scalar> build_index(const Eigen::MatrixBase<Derived>& points,
                                                typename Derived::Scalar cell_size) {
  using Scalar = typename Derived::Scalar;
  if (points.rows() == 0) throw ValidationError("cannot index an empty point set");
  return GridIndex<Scalar>(Points3<Scalar>(points), cell_size);
}

// Indices whose distance to `query` is strictly below `radius`, ascending.
template <typename Scalar, typename Derived>
IndexList neighbors_within(const GridIndex<Scalar>& index, const Eigen::MatrixBase<Derived>& query,
                           Scalar radius) {
  IndexList out;
  if (!(radius > Scalar(0))) return out;
  const auto& pts = index.points();
  const Scalar cs = index.cell_size();
  // Widen the scanned range by a few ulps so rounding in q +/- r can never
  // exclude a cell holding a point that passes the distance predicate.
  CellKey lo, hi;
  for (int d = 0; d < 3; ++d) {
    const Scalar q = Scalar(query(d));
    const Scalar slack =
        Scalar(8) * std::numeric_limits<Scalar>::epsilon() * (std::abs(q) + radius);
    lo[d] = detail::floor_to_cell<Scalar>(q - radius - slack, cs);
    hi[d] = detail::floor_to_cell<Scalar>(q + radius + slack, cs);
  }
  const long double span_cells = static_cast<long double>(hi[0] - lo[0] + 1) *
                                 static_cast<long double>(hi[1] - lo[1] + 1) *
                                 static_cast<long double>(hi[2] - lo[2] + 1);
  auto scan = [&](std::span<const int> members) {
    for (int i : members)
      if (within_radius(pts.row(i), query, radius)) out.push_back(i);
  };
  if (span_cells > static_cast<long double>(index.num_cells())) {
    for (std::size_t c = 0; c < index.num_cells(); ++c) {
      const CellKey& k = index.cell_key(c);
      if (k[0] < lo[0] || k[0] > hi[0] || k[1] < lo[1] || k[1] > hi[1] || k[2] < lo[2] ||
          k[2] > hi[2])
        continue;
      scan(index.cell_members(c));
    }
  } else {
    for (std::int64_t x = lo[0]; x <= hi[0]; ++x)
      for (std::int64_t y = lo[1]; y <= hi[1]; ++y)
        for (std::int64_t z = lo[2]; z <= hi[2]; ++z) scan(index.cell({x, y, z}));
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Exhaustive reference for neighbors_within.
template <typename DerivedP, typename DerivedQ>
IndexList brute_neighbors(const Eigen::MatrixBase<DerivedP>& points,
                          const Eigen::MatrixBase<DerivedQ>& query,
                          typename DerivedP::Scalar radius) {
  IndexList out;
  if (!(radius > 0)) return out;
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    if (within_radius(points.row(i), query, radius)) out.push_back(static_cast<int>(i));
  return out;
}

}  // namespace hpgseg

#endif  // HPGSEG_SPATIAL_HPP_
