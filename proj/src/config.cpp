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

#include "hpgseg/config.hpp"

#include <cmath>

#include "hpgseg/error.hpp"

namespace hpgseg {

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& msg) {
  throw ValidationError(field + ": " + msg);
}

template <typename T>
T read_field(const nlohmann::json& doc, const std::string& field) {
  try {
    return doc.at(field).get<T>();
  } catch (const nlohmann::json::exception& e) {
    fail(field, std::string("wrong type (") + e.what() + ")");
  }
}

}  // namespace

std::string to_string(ClusterSpace space) {
  return space == ClusterSpace::kShifted ? "shifted" : "original";
}

ClusterSpace cluster_space_from_string(const std::string& name) {
  if (name == "shifted") return ClusterSpace::kShifted;
  if (name == "original") return ClusterSpace::kOriginal;
  throw ValidationError("cluster_space: expected 'shifted' or 'original', got '" + name + "'");
}

void PipelineConfig::validate() const {
  if (radii.empty()) fail("radii", "at least one radius is required");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!std::isfinite(radii[i]) || radii[i] <= 0)
      fail("radii[" + std::to_string(i) + "]", "must be a positive finite number");
    if (i > 0 && !(radii[i - 1] < radii[i]))
      fail("radii[" + std::to_string(i) + "]", "radii must be strictly increasing");
  }
  if (min_group_size < 1) fail("min_group_size", "must be >= 1");
  if (!(nms_iou > 0 && nms_iou <= 1)) fail("nms_iou", "must lie in (0, 1]");
  if (!(mask_binarize_threshold > 0 && mask_binarize_threshold < 1))
    fail("mask_binarize_threshold", "must lie in (0, 1)");
  if (!(score_iou_low >= 0 && score_iou_low <= 1)) fail("score_iou_low", "must lie in [0, 1]");
  if (!(score_iou_high >= 0 && score_iou_high <= 1)) fail("score_iou_high", "must lie in [0, 1]");
  if (!(score_iou_low < score_iou_high))
    fail("score_iou_high", "must be greater than score_iou_low");
  if (!(std::isfinite(voxel_size) && voxel_size >= 0)) fail("voxel_size", "must be >= 0");
}

nlohmann::json to_json(const PipelineConfig& cfg) {
  return {
      {"radii", cfg.radii},
      {"min_group_size", cfg.min_group_size},
      {"nms_iou", cfg.nms_iou},
      {"cluster_space", to_string(cfg.cluster_space)},
      {"mask_binarize_threshold", cfg.mask_binarize_threshold},
      {"ignored_classes", cfg.ignored_classes},
      {"score_iou_low", cfg.score_iou_low},
      {"score_iou_high", cfg.score_iou_high},
      {"rng_seed", cfg.rng_seed},
      {"voxel_size", cfg.voxel_size},
  };
}

PipelineConfig config_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ValidationError("config: expected a JSON object");
  PipelineConfig cfg;
  for (const auto& [key, value] : doc.items()) {
    if (key == "radii") {
      cfg.radii = read_field<std::vector<double>>(doc, key);
    } else if (key == "min_group_size") {
      cfg.min_group_size = read_field<int>(doc, key);
    } else if (key == "nms_iou") {
      cfg.nms_iou = read_field<double>(doc, key);
    } else if (key == "cluster_space") {
      cfg.cluster_space = cluster_space_from_string(read_field<std::string>(doc, key));
    } else if (key == "mask_binarize_threshold") {
      cfg.mask_binarize_threshold = read_field<double>(doc, key);
    } else if (key == "ignored_classes") {
      cfg.ignored_classes = read_field<std::set<int>>(doc, key);
    } else if (key == "score_iou_low") {
      cfg.score_iou_low = read_field<double>(doc, key);
    } else if (key == "score_iou_high") {
      cfg.score_iou_high = read_field<double>(doc, key);
    } else if (key == "rng_seed") {
      if (!value.is_number_unsigned()) fail(key, "must be a non-negative integer");
      cfg.rng_seed = value.get<std::uint64_t>();
    } else if (key == "voxel_size") {
      cfg.voxel_size = read_field<double>(doc, key);
    } else {
      fail(key, "unknown configuration field");
    }
  }
  cfg.validate();
  return cfg;
}

}  // namespace hpgseg
