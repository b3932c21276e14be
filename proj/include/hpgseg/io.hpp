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
// File formats.
//
// Columnar text: a header line of space-separated column names, then one
// point per line. Columns: x y z (required), r g b, sem, inst,
// offx offy offz, f0 .. f(k-1). Groups (r g b, offx offy offz, f*) are
// all-or-nothing. ASCII PLY uses the same names for vertex properties
// (red/green/blue of integer type are accepted and scaled by 1/255).
// Decimals are written in shortest round-trip form.

#ifndef HPGSEG_IO_HPP_
#define HPGSEG_IO_HPP_

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "hpgseg/inference.hpp"
#include "hpgseg/types.hpp"
#include "json.hpp"

namespace hpgseg {

enum class CloudFormat { kColumnar, kPlyAscii };

CloudFormat cloud_format_from_string(const std::string& name);

PointCloud read_cloud(std::istream& in, CloudFormat format);
void write_cloud(std::ostream& out, const PointCloud& cloud, CloudFormat format);

PointCloud load_cloud(const std::filesystem::path& path, CloudFormat format);
void save_cloud(const std::filesystem::path& path, const PointCloud& cloud, CloudFormat format);

// [{"id", "class", "indices", "centroid"}, ...]
nlohmann::json to_json(const std::vector<GroundTruthInstance>& gts);
std::vector<GroundTruthInstance> ground_truth_from_json(const nlohmann::json& doc);

// [{"class", "confidence", "indices"}, ...]
nlohmann::json to_json(const std::vector<Prediction>& preds);
std::vector<Prediction> predictions_from_json(const nlohmann::json& doc);

// "point,prediction" rows; a point covered by several predictions takes the
// first one in list order, uncovered points get -1.
std::string assignment_csv(const std::vector<Prediction>& preds, std::size_t num_points);

std::string read_text(const std::filesystem::path& path);
nlohmann::json read_json(const std::filesystem::path& path);
// Writes to a sibling temporary file, then renames over `path`.
void write_text_atomic(const std::filesystem::path& path, const std::string& content);
std::string dump_json(const nlohmann::json& doc);

}  // namespace hpgseg

#endif  // HPGSEG_IO_HPP_
