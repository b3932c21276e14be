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

#include "hpgseg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "hpgseg/cloud.hpp"
#include "hpgseg/random.hpp"

namespace hpgseg {

namespace {

constexpr int kPlacementAttempts = 10000;
// Lattice step and per-axis jitter as fractions of intra_spacing. The worst
// neighbor link is about 1.12 * step + 2 * sqrt(3) * jitter < intra_spacing.
constexpr double kStepFraction = 0.7;
constexpr double kJitterFraction = 0.05;

[[noreturn]] void fail(const std::string& field, const std::string& msg) {
  throw ValidationError(field + ": " + msg);
}

// --- box surface ---------------------------------------------------------

std::int64_t box_count(std::int64_t n) { return 6 * n * n + 2; }

// Lattice of the cube surface, `n` steps per side, centered at the origin.
std::vector<Eigen::Vector3d> box_lattice(double side, std::int64_t n) {
  std::vector<Eigen::Vector3d> pts;
  const double step = side / static_cast<double>(n);
  for (std::int64_t i = 0; i <= n; ++i)
    for (std::int64_t j = 0; j <= n; ++j)
      for (std::int64_t k = 0; k <= n; ++k) {
        const bool surface = i == 0 || i == n || j == 0 || j == n || k == 0 || k == n;
        if (!surface) continue;
        pts.emplace_back(-0.5 * side + step * static_cast<double>(i),
                         -0.5 * side + step * static_cast<double>(j),
                         -0.5 * side + step * static_cast<double>(k));
      }
  return pts;
}

// --- sphere shell --------------------------------------------------------

struct RingPlan {
  std::int64_t rings = 1;
  std::vector<std::int64_t> per_ring;
  std::int64_t total = 0;
};

RingPlan sphere_plan(double radius, double step) {
  RingPlan plan;
  plan.rings = std::max<std::int64_t>(
      1, static_cast<std::int64_t>(std::ceil(std::numbers::pi * radius / step)));
  for (std::int64_t j = 0; j <= plan.rings; ++j) {
    const double theta =
        std::numbers::pi * static_cast<double>(j) / static_cast<double>(plan.rings);
    const double circumference = 2.0 * std::numbers::pi * radius * std::sin(theta);
    const auto k = std::max<std::int64_t>(
        1, static_cast<std::int64_t>(std::ceil(circumference / step - 1e-9)));
    plan.per_ring.push_back(k);
    plan.total += k;
  }
  return plan;
}

std::vector<Eigen::Vector3d> sphere_lattice(double radius, const RingPlan& plan) {
  std::vector<Eigen::Vector3d> pts;
  for (std::int64_t j = 0; j <= plan.rings; ++j) {
    const double theta =
        std::numbers::pi * static_cast<double>(j) / static_cast<double>(plan.rings);
    const std::int64_t k = plan.per_ring[static_cast<std::size_t>(j)];
    const double phase = 0.5 * static_cast<double>(j % 2);
    for (std::int64_t a = 0; a < k; ++a) {
      const double phi =
          2.0 * std::numbers::pi * (static_cast<double>(a) + phase) / static_cast<double>(k);
      pts.emplace_back(radius * std::sin(theta) * std::cos(phi),
                       radius * std::sin(theta) * std::sin(phi), radius * std::cos(theta));
    }
  }
  return pts;
}

// Unjittered instance shape centered at the origin, honoring the point
// budget; `extent` may shrink when the budget is exceeded.
std::vector<Eigen::Vector3d> instance_shape(const SceneSpec& spec, double& extent) {
  const double step = kStepFraction * spec.intra_spacing;
  const std::int64_t lo = spec.points_per_instance.min;
  const std::int64_t hi = spec.points_per_instance.max;
  if (spec.shape == ShapeKind::kBox) {
    std::int64_t n =
        std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(extent / step - 1e-9)));
    if (box_count(n) > hi) {
      while (n > 1 && box_count(n) > hi) --n;
      if (box_count(n) > hi) fail("scene.points_per_instance", "maximum below 8 box corners");
      extent = std::min(extent, step * static_cast<double>(n));
    }
    while (box_count(n) < lo) ++n;
    if (box_count(n) > hi)
      fail("scene.points_per_instance", "no box lattice size falls inside the range");
    return box_lattice(extent, n);
  }
  double radius = 0.5 * extent;
  RingPlan plan = sphere_plan(radius, step);
  if (plan.total > hi) {
    double a = 0.0, b = radius;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (a + b);
      if (sphere_plan(mid, step).total > hi)
        b = mid;
      else
        a = mid;
    }
    radius = a;
    plan = sphere_plan(radius, step);
    if (plan.total > hi || radius <= 0)
      fail("scene.points_per_instance", "maximum too small for a sphere shell");
  }
  if (plan.total < lo) {
    // dense: step `a` reaches the budget; sparse: step `b` does not
    double b = step;
    double a = 0.5 * step;
    while (sphere_plan(radius, a).total < lo) {
      b = a;
      a *= 0.5;
      if (a < 1e-9 * step) fail("scene.points_per_instance", "minimum unreachable");
    }
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (a + b);
      if (sphere_plan(radius, mid).total >= lo)
        a = mid;
      else
        b = mid;
    }
    plan = sphere_plan(radius, a);
    if (plan.total > hi)
      fail("scene.points_per_instance", "no sphere lattice size falls inside the range");
  }
  extent = 2.0 * radius;
  return sphere_lattice(radius, plan);
}

double aabb_gap(const Eigen::Vector3d& ca, double ha, const Eigen::Vector3d& cb, double hb) {
  const Eigen::Vector3d sep = ((ca - cb).cwiseAbs().array() - (ha + hb)).cwiseMax(0.0).matrix();
  return sep.norm();
}

}  // namespace

void SceneSpec::validate() const {
  if (num_instances < 1) fail("scene.num_instances", "must be >= 1");
  if (classes.empty()) fail("scene.classes", "must be nonempty");
  for (int c : classes)
    if (c < 0) fail("scene.classes", "class ids must be non-negative");
  if (points_per_instance.min < 1) fail("scene.points_per_instance", "lower bound must be >= 1");
  if (points_per_instance.max < points_per_instance.min)
    fail("scene.points_per_instance", "upper bound below lower bound");
  if (!(instance_extent.min > 0)) fail("scene.instance_extent", "lower bound must be > 0");
  if (instance_extent.max < instance_extent.min)
    fail("scene.instance_extent", "upper bound below lower bound");
  if (!(min_gap > 0)) fail("scene.min_gap", "must be > 0");
  if (!(intra_spacing > 0)) fail("scene.intra_spacing", "must be > 0");
  if (!bounds_min.allFinite() || !bounds_max.allFinite() ||
      !(bounds_max.array() > bounds_min.array()).all())
    fail("scene.bounds", "max must exceed min on every axis");
}

void NoiseSpec::validate() const {
  if (!(offset_sigma >= 0 && std::isfinite(offset_sigma)))
    fail("noise.offset_sigma", "must be >= 0");
  if (!(semantic_flip_rate >= 0 && semantic_flip_rate < 1))
    fail("noise.semantic_flip_rate", "must lie in [0, 1)");
  if (!(mask_flip_rate >= 0 && mask_flip_rate < 1))
    fail("noise.mask_flip_rate", "must lie in [0, 1)");
}

Scene generate_scene(const SceneSpec& spec) {
  spec.validate();
  Rng rng(derive_seed(spec.seed, {0x5ce7e}));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double jitter = kJitterFraction * spec.intra_spacing;

  std::vector<Eigen::Vector3d> centers;
  std::vector<double> halves;
  std::vector<Eigen::Vector3d> all_points;
  std::vector<int> owner;
  std::vector<int> instance_class;
  std::vector<Eigen::Vector3d> instance_color;

  for (int inst = 0; inst < spec.num_instances; ++inst) {
    double extent = spec.instance_extent.min +
                    unit(rng) * (spec.instance_extent.max - spec.instance_extent.min);
    const std::vector<Eigen::Vector3d> shape = instance_shape(spec, extent);
    const double half = 0.5 * extent + jitter;
    const Eigen::Vector3d lo = spec.bounds_min.array() + half;
    const Eigen::Vector3d hi = spec.bounds_max.array() - half;
    if (!(hi.array() >= lo.array()).all())
      throw ValidationError("scene: instance extent does not fit inside the bounds");
    bool placed = false;
    Eigen::Vector3d center;
    for (int attempt = 0; attempt < kPlacementAttempts && !placed; ++attempt) {
      for (int d = 0; d < 3; ++d) center(d) = lo(d) + unit(rng) * (hi(d) - lo(d));
      placed = true;
      for (std::size_t k = 0; k < centers.size(); ++k)
        if (aabb_gap(center, half, centers[k], halves[k]) < spec.min_gap) {
          placed = false;
          break;
        }
    }
    if (!placed)
      throw ValidationError("scene: infeasible packing, could not place instance " +
                            std::to_string(inst) + " after " + std::to_string(kPlacementAttempts) +
                            " attempts");
    centers.push_back(center);
    halves.push_back(half);
    std::uniform_int_distribution<std::size_t> pick(0, spec.classes.size() - 1);
    instance_class.push_back(spec.classes[pick(rng)]);
    instance_color.emplace_back(unit(rng), unit(rng), unit(rng));
    for (const Eigen::Vector3d& p : shape) {
      Eigen::Vector3d q = center + p;
      for (int d = 0; d < 3; ++d) q(d) += jitter * (2.0 * unit(rng) - 1.0);
      all_points.push_back(q);
      owner.push_back(inst);
    }
  }

  Scene scene;
  const auto n = static_cast<Eigen::Index>(all_points.size());
  scene.cloud.positions.resize(n, 3);
  Points3d colors(n, 3);
  Eigen::VectorXi labels(n), ids(n);
  std::vector<IndexList> members(static_cast<std::size_t>(spec.num_instances));
  for (Eigen::Index i = 0; i < n; ++i) {
    const int inst = owner[static_cast<std::size_t>(i)];
    scene.cloud.positions.row(i) = all_points[static_cast<std::size_t>(i)].transpose();
    colors.row(i) = instance_color[static_cast<std::size_t>(inst)].transpose();
    labels(i) = instance_class[static_cast<std::size_t>(inst)];
    ids(i) = inst;
    members[static_cast<std::size_t>(inst)].push_back(static_cast<int>(i));
  }
  scene.cloud.colors = std::move(colors);
  scene.cloud.semantic_labels = std::move(labels);
  scene.cloud.gt_instance_ids = std::move(ids);
  for (int inst = 0; inst < spec.num_instances; ++inst)
    scene.instances.push_back(make_gt_instance(inst, instance_class[static_cast<std::size_t>(inst)],
                                               std::move(members[static_cast<std::size_t>(inst)]),
                                               scene.cloud.positions));
  return scene;
}

PointCloud simulate_predictions(const PointCloud& cloud,
                                const std::vector<GroundTruthInstance>& gts,
                                const NoiseSpec& noise) {
  noise.validate();
  if (gts.empty()) throw ValidationError("simulate_predictions: ground-truth instances required");
  const Eigen::Index n = cloud.size();
  Eigen::VectorXi gt_labels =
      cloud.semantic_labels ? *cloud.semantic_labels : Eigen::VectorXi::Constant(n, -1);
  Points3d targets = Points3d::Zero(n, 3);
  int num_classes = 0;
  for (const GroundTruthInstance& gt : gts) {
    num_classes = std::max(num_classes, gt.semantic_class + 1);
    for (int i : gt.point_indices) {
      if (i < 0 || i >= n)
        throw ValidationError("simulate_predictions: instance member outside the cloud");
      targets.row(i) = gt.centroid.transpose() - cloud.positions.row(i);
      if (gt_labels(i) < 0) gt_labels(i) = gt.semantic_class;
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (gt_labels(i) < 0)
      throw ValidationError("simulate_predictions: point " + std::to_string(i) +
                            " has no ground-truth label");
    num_classes = std::max(num_classes, gt_labels(i) + 1);
  }

  Rng rng(derive_seed(noise.seed, {0x51a7}));
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::bernoulli_distribution flip(noise.semantic_flip_rate);
  std::uniform_int_distribution<int> other(0, std::max(0, num_classes - 2));

  PointCloud out = cloud;
  Points3d offsets(n, 3);
  Eigen::VectorXi labels(n);
  RowMatrixXd scores = RowMatrixXd::Zero(n, num_classes);
  RowMatrixXd features = RowMatrixXd::Zero(n, 3 + num_classes);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int d = 0; d < 3; ++d) offsets(i, d) = targets(i, d) + noise.offset_sigma * gauss(rng);
    int label = gt_labels(i);
    if (flip(rng) && num_classes > 1) {
      const int draw = other(rng);
      label = draw >= label ? draw + 1 : draw;
    }
    labels(i) = label;
    scores(i, label) = kSimulatedLogit;
    features.block<1, 3>(i, 0) = cloud.positions.row(i);
    features(i, 3 + label) = 1.0;
  }
  out.offsets = std::move(offsets);
  out.semantic_labels = std::move(labels);
  out.semantic_scores = std::move(scores);
  out.features = std::move(features);
  if (!out.gt_instance_ids) {
    Eigen::VectorXi ids = Eigen::VectorXi::Constant(n, -1);
    for (const GroundTruthInstance& gt : gts)
      for (int i : gt.point_indices) ids(i) = gt.id;
    out.gt_instance_ids = std::move(ids);
  }
  return out;
}

nlohmann::json to_json(const SceneSpec& spec) {
  return {
      {"num_instances", spec.num_instances},
      {"classes", spec.classes},
      {"shape", spec.shape == ShapeKind::kBox ? "box" : "sphere"},
      {"points_per_instance", {spec.points_per_instance.min, spec.points_per_instance.max}},
      {"instance_extent", {spec.instance_extent.min, spec.instance_extent.max}},
      {"min_gap", spec.min_gap},
      {"intra_spacing", spec.intra_spacing},
      {"bounds",
       {{"min", {spec.bounds_min.x(), spec.bounds_min.y(), spec.bounds_min.z()}},
        {"max", {spec.bounds_max.x(), spec.bounds_max.y(), spec.bounds_max.z()}}}},
      {"seed", spec.seed},
  };
}

nlohmann::json to_json(const NoiseSpec& noise) {
  return {{"offset_sigma", noise.offset_sigma},
          {"semantic_flip_rate", noise.semantic_flip_rate},
          {"mask_flip_rate", noise.mask_flip_rate},
          {"seed", noise.seed}};
}

namespace {

template <typename T>
T get_field(const nlohmann::json& v, const std::string& path) {
  try {
    return v.get<T>();
  } catch (const nlohmann::json::exception&) {
    fail(path, "wrong type");
  }
}

Eigen::Vector3d get_vec3(const nlohmann::json& v, const std::string& path) {
  const auto xs = get_field<std::vector<double>>(v, path);
  if (xs.size() != 3) fail(path, "expected 3 numbers");
  return {xs[0], xs[1], xs[2]};
}

std::uint64_t get_seed(const nlohmann::json& v, const std::string& path) {
  if (!v.is_number_unsigned()) fail(path, "must be a non-negative integer");
  return v.get<std::uint64_t>();
}

}  // namespace

SceneSpec scene_spec_from_json(const nlohmann::json& doc, const std::string& where) {
  if (!doc.is_object()) fail(where, "expected a JSON object");
  SceneSpec spec;
  for (const auto& [key, v] : doc.items()) {
    const std::string path = where + "." + key;
    if (key == "num_instances") {
      spec.num_instances = get_field<int>(v, path);
    } else if (key == "classes") {
      spec.classes = get_field<std::vector<int>>(v, path);
    } else if (key == "shape") {
      const auto s = get_field<std::string>(v, path);
      if (s == "box")
        spec.shape = ShapeKind::kBox;
      else if (s == "sphere")
        spec.shape = ShapeKind::kSphere;
      else
        fail(path, "expected 'box' or 'sphere'");
    } else if (key == "points_per_instance") {
      const auto r = get_field<std::vector<int>>(v, path);
      if (r.size() != 2) fail(path, "expected [min, max]");
      spec.points_per_instance = {r[0], r[1]};
    } else if (key == "instance_extent") {
      const auto r = get_field<std::vector<double>>(v, path);
      if (r.size() != 2) fail(path, "expected [min, max]");
      spec.instance_extent = {r[0], r[1]};
    } else if (key == "min_gap") {
      spec.min_gap = get_field<double>(v, path);
    } else if (key == "intra_spacing") {
      spec.intra_spacing = get_field<double>(v, path);
    } else if (key == "bounds") {
      if (!v.is_object() || !v.contains("min") || !v.contains("max"))
        fail(path, "expected {\"min\": [x,y,z], \"max\": [x,y,z]}");
      spec.bounds_min = get_vec3(v["min"], path + ".min");
      spec.bounds_max = get_vec3(v["max"], path + ".max");
    } else if (key == "seed") {
      spec.seed = get_seed(v, path);
    } else {
      fail(path, "unknown field");
    }
  }
  try {
    spec.validate();
  } catch (const ValidationError& e) {
    // re-root the field path under `where`
    std::string msg = e.what();
    if (msg.rfind("scene.", 0) == 0) msg = where + msg.substr(5);
    throw ValidationError(msg);
  }
  return spec;
}

NoiseSpec noise_spec_from_json(const nlohmann::json& doc, const std::string& where) {
  if (!doc.is_object()) fail(where, "expected a JSON object");
  NoiseSpec noise;
  for (const auto& [key, v] : doc.items()) {
    const std::string path = where + "." + key;
    if (key == "offset_sigma")
      noise.offset_sigma = get_field<double>(v, path);
    else if (key == "semantic_flip_rate")
      noise.semantic_flip_rate = get_field<double>(v, path);
    else if (key == "mask_flip_rate")
      noise.mask_flip_rate = get_field<double>(v, path);
    else if (key == "seed")
      noise.seed = get_seed(v, path);
    else
      fail(path, "unknown field");
  }
  try {
    noise.validate();
  } catch (const ValidationError& e) {
    std::string msg = e.what();
    if (msg.rfind("noise.", 0) == 0) msg = where + msg.substr(5);
    throw ValidationError(msg);
  }
  return noise;
}

}  // namespace hpgseg
