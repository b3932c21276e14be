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
// Hierarchical point grouping.
//
// Round 1 links same-label points closer than r_1 and takes connected
// components. Round h links two same-label groups of round h-1 when some
// cross pair of their points is closer than r_h; with r_{h-1} < r_h the
// groups can only coarsen. The proposals handed to the mask stage are the
// union of all rounds with duplicate point sets removed and groups smaller
// than the minimum size dropped.
//
// Connectivity at radius r uses a grid of cell size slightly above r/2:
// points sharing a cell are always within r of each other, so a cell is
// united in one step and only cell pairs at most two cells apart need a
// pairwise scan, which stops at the first linking pair.

#ifndef HPGSEG_HPG_HPP_
#define HPGSEG_HPG_HPP_

#include <algorithm>
#include <map>
#include <set>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "hpgseg/cloud.hpp"
#include "hpgseg/config.hpp"
#include "hpgseg/spatial.hpp"
#include "hpgseg/types.hpp"
#include "hpgseg/union_find.hpp"

namespace hpgseg {

struct Group {
  IndexList point_indices;
  int semantic_class = 0;
  // 1-based grouping round that produced the group.
  int round = 1;

  friend bool operator==(const Group&, const Group&) = default;
};

struct GroupingResult {
  std::vector<std::vector<Group>> rounds;
  std::vector<Group> merged;
};

// Orders groups by (round, class, smallest member).
inline bool group_less(const Group& a, const Group& b) {
  return std::forward_as_tuple(a.round, a.semantic_class, a.point_indices.front()) <
         std::forward_as_tuple(b.round, b.semantic_class, b.point_indices.front());
}

namespace detail {

// Unites, in `uf`, every pair of points from `members` closer than `radius`.
// `members` holds indices into `coords`; all of them must share one label.
template <typename Derived>
void link_within_radius(const Eigen::MatrixBase<Derived>& coords, const IndexList& members,
                        typename Derived::Scalar radius, UnionFind& uf) {
  using Scalar = typename Derived::Scalar;
  if (members.size() < 2) return;
  Points3<Scalar> sub(static_cast<Eigen::Index>(members.size()), 3);
  for (std::size_t k = 0; k < members.size(); ++k)
    sub.row(static_cast<Eigen::Index>(k)) = coords.row(members[k]);
  const Scalar cell = radius * Scalar(0.5) * (Scalar(1) + Scalar(1e-9));
  const GridIndex<Scalar> grid(std::move(sub), cell);
  const auto& pts = grid.points();

  for (std::size_t c = 0; c < grid.num_cells(); ++c) {
    auto cell_pts = grid.cell_members(c);
    for (std::size_t k = 1; k < cell_pts.size(); ++k)
      uf.unite(members[cell_pts[0]], members[cell_pts[k]]);
  }

  // Cells are sorted by (x, y, z), so each (x, y) column is a contiguous run
  // ordered by z. Pairs are visited for offsets (dx, dy, dz) > (0, 0, 0)
  // lexicographically, |offset| <= 2 per axis.
  struct Column {
    std::size_t begin;
    std::size_t end;
  };
  std::vector<Column> columns;
  std::unordered_map<CellKey, std::size_t, CellKeyHash> column_of;
  for (std::size_t c = 0; c < grid.num_cells(); ++c) {
    const CellKey& key = grid.cell_key(c);
    if (c == 0 || key[0] != grid.cell_key(c - 1)[0] || key[1] != grid.cell_key(c - 1)[1]) {
      column_of.emplace(CellKey{key[0], key[1], 0}, columns.size());
      columns.push_back({c, c});
    }
    columns.back().end = c + 1;
  }

  auto link_cells = [&](std::size_t ca, std::size_t cb) {
    auto a = grid.cell_members(ca);
    auto b = grid.cell_members(cb);
    if (uf.same(members[a[0]], members[b[0]])) return;
    for (int i : a)
      for (int j : b)
        if (within_radius(pts.row(i), pts.row(j), radius)) {
          uf.unite(members[i], members[j]);
          return;
        }
  };

  for (const Column& col : columns) {
    const CellKey& head = grid.cell_key(col.begin);
    for (int dx = 0; dx <= 2; ++dx)
      for (int dy = -2; dy <= 2; ++dy) {
        if (dx == 0 && dy < 0) continue;
        const bool same_column = dx == 0 && dy == 0;
        Column other = col;
        if (!same_column) {
          auto it = column_of.find(CellKey{head[0] + dx, head[1] + dy, 0});
          if (it == column_of.end()) continue;
          other = columns[it->second];
        }
        std::size_t lo = other.begin;
        for (std::size_t c = col.begin; c < col.end; ++c) {
          const std::int64_t z = grid.cell_key(c)[2];
          const std::int64_t z_min = same_column ? z + 1 : z - 2;
          while (lo < other.end && grid.cell_key(lo)[2] < z_min) ++lo;
          for (std::size_t o = lo; o < other.end && grid.cell_key(o)[2] <= z + 2; ++o)
            link_cells(c, o);
        }
      }
  }
}

// Connected components of `uf` restricted to `points`, one group per
// component, each sorted ascending. Output order follows group_less.
inline std::vector<Group> collect_components(UnionFind& uf, const IndexList& points,
                                             const Eigen::VectorXi& labels, int round) {
  std::map<int, std::size_t> slot_of_root;
  std::vector<Group> groups;
  for (int p : points) {
    const int root = uf.find(p);
    auto [it, inserted] = slot_of_root.try_emplace(root, groups.size());
    if (inserted) groups.push_back(Group{{}, labels(p), round});
    groups[it->second].point_indices.push_back(p);
  }
  std::sort(groups.begin(), groups.end(), group_less);
  return groups;
}

}  // namespace detail

// Same-label single-linkage clustering at radius r1. Points whose label is in
// `ignored` join no group.
template <typename Derived>
std::vector<Group> cluster_round1(const Eigen::MatrixBase<Derived>& coords,
                                  const Eigen::VectorXi& labels, const std::set<int>& ignored,
                                  typename Derived::Scalar r1) {
  if (coords.rows() != labels.size())
    throw ValidationError("coordinates and labels differ in length");
  if (!(r1 > 0)) throw ValidationError("clustering radius must be positive");
  std::map<int, IndexList> by_class;
  for (Eigen::Index i = 0; i < labels.size(); ++i)
    if (!ignored.contains(labels(i))) by_class[labels(i)].push_back(static_cast<int>(i));
  UnionFind uf(static_cast<std::size_t>(coords.rows()));
  IndexList active;
  for (const auto& [cls, members] : by_class) {
    detail::link_within_radius(coords, members, r1, uf);
    active.insert(active.end(), members.begin(), members.end());
  }
  std::sort(active.begin(), active.end());
  return detail::collect_components(uf, active, labels, 1);
}

// Merges same-class groups of `prev` whose minimum inter-point distance is
// below `radius`. `prev_radius` is the radius of the round that produced
// `prev`; `radius` must exceed it.
template <typename Derived>
std::vector<Group> merge_round(const std::vector<Group>& prev,
                               const Eigen::MatrixBase<Derived>& coords,
                               typename Derived::Scalar prev_radius,
                               typename Derived::Scalar radius, int round) {
  if (!(radius > prev_radius))
    throw ValidationError("merge radius must exceed the previous round's radius");
  const auto n = static_cast<std::size_t>(coords.rows());
  UnionFind uf(n);
  Eigen::VectorXi labels = Eigen::VectorXi::Constant(coords.rows(), -1);
  std::map<int, IndexList> by_class;
  for (const Group& g : prev) {
    for (int p : g.point_indices) {
      if (p < 0 || static_cast<std::size_t>(p) >= n)
        throw ValidationError("group references a point outside the cloud");
      if (labels(p) != -1)
        throw ValidationError("input groups overlap at point " + std::to_string(p));
      labels(p) = g.semantic_class;
      uf.unite(g.point_indices.front(), p);
    }
    IndexList& members = by_class[g.semantic_class];
    members.insert(members.end(), g.point_indices.begin(), g.point_indices.end());
  }
  IndexList active;
  for (auto& [cls, members] : by_class) {
    std::sort(members.begin(), members.end());
    detail::link_within_radius(coords, members, radius, uf);
    active.insert(active.end(), members.begin(), members.end());
  }
  std::sort(active.begin(), active.end());
  return detail::collect_components(uf, active, labels, round);
}

// Drops exact duplicate point sets (earliest round wins) and groups below
// the minimum size. Input rounds must already be in group_less order.
inline std::vector<Group> merge_rounds(const std::vector<std::vector<Group>>& rounds,
                                       int min_group_size) {
  std::set<IndexList> seen;
  std::vector<Group> merged;
  for (const auto& round : rounds)
    for (const Group& g : round) {
      if (static_cast<int>(g.point_indices.size()) < min_group_size) continue;
      if (!seen.insert(g.point_indices).second) continue;
      merged.push_back(g);
    }
  return merged;
}

template <typename Derived>
GroupingResult hierarchical_group(const Eigen::MatrixBase<Derived>& coords,
                                  const Eigen::VectorXi& labels, const PipelineConfig& cfg) {
  cfg.validate();
  GroupingResult result;
  result.rounds.reserve(cfg.radii.size());
  result.rounds.push_back(cluster_round1(coords, labels, cfg.ignored_classes,
                                         static_cast<typename Derived::Scalar>(cfg.radii[0])));
  for (std::size_t h = 1; h < cfg.radii.size(); ++h)
    result.rounds.push_back(merge_round(result.rounds.back(), coords, cfg.radii[h - 1],
                                        cfg.radii[h], static_cast<int>(h + 1)));
  result.merged = merge_rounds(result.rounds, cfg.min_group_size);
  return result;
}

// Groups a cloud in the coordinate space chosen by cfg.cluster_space.
template <typename Scalar>
GroupingResult hierarchical_group(const BasicPointCloud<Scalar>& cloud,
                                  const BasicShiftedCloud<Scalar>* shifted,
                                  const PipelineConfig& cfg) {
  const Eigen::VectorXi labels = semantic_labels_of(cloud);
  if (cfg.cluster_space == ClusterSpace::kOriginal)
    return hierarchical_group(cloud.positions, labels, cfg);
  if (shifted != nullptr) return hierarchical_group(shifted->centroids, labels, cfg);
  return hierarchical_group(shift_points(cloud).centroids, labels, cfg);
}

}  // namespace hpgseg

#endif  // HPGSEG_HPG_HPP_
