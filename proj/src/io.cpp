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

#include "hpgseg/io.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string_view>

#include "hpgseg/cloud.hpp"
#include "hpgseg/format.hpp"

namespace hpgseg {

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

bool is_blank(std::string_view line) {
  for (char c : line)
    if (!std::isspace(static_cast<unsigned char>(c))) return false;
  return true;
}

// Where each known column lives in a row.
struct Layout {
  std::size_t num_columns = 0;
  std::array<int, 3> xyz{-1, -1, -1};
  std::array<int, 3> rgb{-1, -1, -1};
  std::array<int, 3> off{-1, -1, -1};
  int sem = -1;
  int inst = -1;
  std::vector<int> features;
  std::vector<bool> integral;
  // Columns skipped on read (PLY properties outside the vocabulary).
  std::vector<bool> ignored;
  bool rgb_bytes = false;
};

// Maps names to column slots. `allow_unknown` lets PLY carry extra
// properties such as normals.
Layout make_layout(const std::vector<std::string>& names, std::size_t line, bool allow_unknown) {
  Layout lay;
  lay.num_columns = names.size();
  lay.integral.assign(names.size(), false);
  lay.ignored.assign(names.size(), false);
  std::map<int, int> feature_cols;
  std::map<std::string, int> seen;
  for (std::size_t c = 0; c < names.size(); ++c) {
    const std::string& n = names[c];
    const int col = static_cast<int>(c);
    if (!seen.emplace(n, col).second) throw ParseError("duplicate column '" + n + "'", line);
    if (n == "x")
      lay.xyz[0] = col;
    else if (n == "y")
      lay.xyz[1] = col;
    else if (n == "z")
      lay.xyz[2] = col;
    else if (n == "r")
      lay.rgb[0] = col;
    else if (n == "g")
      lay.rgb[1] = col;
    else if (n == "b")
      lay.rgb[2] = col;
    else if (n == "offx")
      lay.off[0] = col;
    else if (n == "offy")
      lay.off[1] = col;
    else if (n == "offz")
      lay.off[2] = col;
    else if (n == "sem") {
      lay.sem = col;
      lay.integral[c] = true;
    } else if (n == "inst") {
      lay.inst = col;
      lay.integral[c] = true;
    } else if (n.size() > 1 && n[0] == 'f') {
      int k = -1;
      if (!parse_int(std::string_view(n).substr(1), k) || k < 0 || std::to_string(k) != n.substr(1))
        throw ParseError("unknown column '" + n + "'", line);
      feature_cols[k] = col;
    } else if (allow_unknown) {
      lay.ignored[c] = true;
    } else {
      throw ParseError("unknown column '" + n + "'", line);
    }
  }
  for (int c : lay.xyz)
    if (c < 0) throw ParseError("columns x, y and z are required", line);
  auto all_or_none = [line](const std::array<int, 3>& cols, const char* what) {
    const int present = (cols[0] >= 0) + (cols[1] >= 0) + (cols[2] >= 0);
    if (present != 0 && present != 3)
      throw ParseError(std::string("partial column group ") + what, line);
  };
  all_or_none(lay.rgb, "r g b");
  all_or_none(lay.off, "offx offy offz");
  int expected = 0;
  for (const auto& [k, col] : feature_cols) {
    if (k != expected) throw ParseError("feature columns must be f0..f(k-1) without gaps", line);
    lay.features.push_back(col);
    ++expected;
  }
  return lay;
}

// Row-major value table filled line by line.
struct Table {
  std::vector<double> values;
  std::size_t rows = 0;
};

void parse_row(std::string_view text, std::size_t line, const Layout& lay, Table& table) {
  const auto tokens = split_ws(text);
  if (tokens.size() != lay.num_columns)
    throw ParseError("expected " + std::to_string(lay.num_columns) + " values, found " +
                         std::to_string(tokens.size()),
                     line);
  for (std::size_t c = 0; c < tokens.size(); ++c) {
    if (lay.ignored[c]) {
      table.values.push_back(0.0);
      continue;
    }
    double v = 0.0;
    if (lay.integral[c]) {
      int iv = 0;
      if (!parse_int(tokens[c], iv))
        throw ParseError("expected an integer, found '" + std::string(tokens[c]) + "'", line);
      v = iv;
    } else {
      if (!parse_double(tokens[c], v))
        throw ParseError("expected a number, found '" + std::string(tokens[c]) + "'", line);
      if (!std::isfinite(v)) throw ParseError("non-finite value", line);
    }
    table.values.push_back(v);
  }
  ++table.rows;
}

PointCloud build_cloud(const Layout& lay, const Table& table) {
  if (table.rows == 0) throw ParseError("file contains no points", 0);
  const auto n = static_cast<Eigen::Index>(table.rows);
  const auto cols = lay.num_columns;
  auto at = [&](Eigen::Index row, int col) {
    return table.values[static_cast<std::size_t>(row) * cols + static_cast<std::size_t>(col)];
  };
  auto gather3 = [&](const std::array<int, 3>& c) {
    Points3d m(n, 3);
    for (Eigen::Index i = 0; i < n; ++i)
      for (int d = 0; d < 3; ++d) m(i, d) = at(i, c[d]);
    return m;
  };
  PointCloud cloud;
  cloud.positions = gather3(lay.xyz);
  if (lay.rgb[0] >= 0) {
    cloud.colors = gather3(lay.rgb);
    if (lay.rgb_bytes) *cloud.colors /= 255.0;
  }
  if (lay.off[0] >= 0) cloud.offsets = gather3(lay.off);
  auto gather_int = [&](int c) {
    Eigen::VectorXi v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = static_cast<int>(at(i, c));
    return v;
  };
  if (lay.sem >= 0) cloud.semantic_labels = gather_int(lay.sem);
  if (lay.inst >= 0) cloud.gt_instance_ids = gather_int(lay.inst);
  if (!lay.features.empty()) {
    RowMatrixXd f(n, static_cast<Eigen::Index>(lay.features.size()));
    for (Eigen::Index i = 0; i < n; ++i)
      for (std::size_t k = 0; k < lay.features.size(); ++k)
        f(i, static_cast<Eigen::Index>(k)) = at(i, lay.features[k]);
    cloud.features = std::move(f);
  }
  cloud.validate();
  return cloud;
}

PointCloud read_columnar(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::optional<Layout> lay;
  Table table;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    if (!lay) {
      std::vector<std::string> names;
      for (auto t : split_ws(line)) names.emplace_back(t);
      lay = make_layout(names, line_no, false);
      continue;
    }
    parse_row(line, line_no, *lay, table);
  }
  if (!lay) throw ParseError("missing header line", 0);
  return build_cloud(*lay, table);
}

bool is_ply_integer_type(const std::string& t) {
  return t == "char" || t == "uchar" || t == "short" || t == "ushort" || t == "int" ||
         t == "uint" || t == "int8" || t == "uint8" || t == "int16" || t == "uint16" ||
         t == "int32" || t == "uint32";
}

PointCloud read_ply(std::istream& in) {
  struct Element {
    std::string name;
    std::size_t count = 0;
    std::vector<std::string> names;
    std::vector<std::string> types;
  };
  std::string line;
  std::size_t line_no = 0;
  auto next = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };
  if (!next() || split_ws(line) != std::vector<std::string_view>{"ply"})
    throw ParseError("missing 'ply' magic", 1);
  std::vector<Element> elements;
  bool format_seen = false;
  while (true) {
    if (!next()) throw ParseError("unterminated PLY header", line_no);
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (tok[0] == "end_header") break;
    if (tok[0] == "comment" || tok[0] == "obj_info") continue;
    if (tok[0] == "format") {
      if (tok.size() != 3 || tok[1] != "ascii")
        throw ParseError("only 'format ascii 1.0' is supported", line_no);
      format_seen = true;
    } else if (tok[0] == "element") {
      int count = -1;
      if (tok.size() != 3 || !parse_int(tok[2], count) || count < 0)
        throw ParseError("malformed element line", line_no);
      elements.push_back({std::string(tok[1]), static_cast<std::size_t>(count), {}, {}});
    } else if (tok[0] == "property") {
      if (elements.empty()) throw ParseError("property before any element", line_no);
      if (tok.size() >= 2 && tok[1] == "list") {
        if (elements.back().name == "vertex")
          throw ParseError("list properties on vertices are not supported", line_no);
        elements.back().names.emplace_back("list");
        elements.back().types.emplace_back("list");
        continue;
      }
      if (tok.size() != 3) throw ParseError("malformed property line", line_no);
      elements.back().types.emplace_back(tok[1]);
      elements.back().names.emplace_back(tok[2]);
    } else {
      throw ParseError("unexpected header keyword '" + std::string(tok[0]) + "'", line_no);
    }
  }
  if (!format_seen) throw ParseError("missing format line", line_no);

  std::optional<Layout> lay;
  Table table;
  for (const Element& el : elements) {
    if (el.name != "vertex") {
      for (std::size_t k = 0; k < el.count; ++k)
        if (!next())
          throw ParseError("unexpected end of file in element '" + el.name + "'", line_no);
      continue;
    }
    std::vector<std::string> names = el.names;
    bool bytes = false;
    for (std::size_t c = 0; c < names.size(); ++c) {
      const char* alias = names[c] == "red"     ? "r"
                          : names[c] == "green" ? "g"
                          : names[c] == "blue"  ? "b"
                                                : nullptr;
      if (alias) {
        names[c] = alias;
        bytes = bytes || is_ply_integer_type(el.types[c]);
      }
    }
    lay = make_layout(names, line_no, true);
    lay->rgb_bytes = bytes;
    for (std::size_t k = 0; k < el.count; ++k) {
      if (!next()) throw ParseError("unexpected end of file in vertex data", line_no);
      parse_row(line, line_no, *lay, table);
    }
  }
  if (!lay) throw ParseError("PLY file has no vertex element", line_no);
  return build_cloud(*lay, table);
}

struct Column {
  std::string name;
  bool integral;
};

std::vector<Column> columns_of(const PointCloud& cloud, Eigen::VectorXi* labels) {
  std::vector<Column> cols{{"x", false}, {"y", false}, {"z", false}};
  if (cloud.colors) cols.insert(cols.end(), {{"r", false}, {"g", false}, {"b", false}});
  if (cloud.semantic_labels || cloud.semantic_scores) {
    *labels = semantic_labels_of(cloud);
    cols.push_back({"sem", true});
  }
  if (cloud.gt_instance_ids) cols.push_back({"inst", true});
  if (cloud.offsets) cols.insert(cols.end(), {{"offx", false}, {"offy", false}, {"offz", false}});
  if (cloud.features)
    for (Eigen::Index k = 0; k < cloud.features->cols(); ++k)
      cols.push_back({"f" + std::to_string(k), false});
  return cols;
}

void write_rows(std::ostream& out, const PointCloud& cloud, const Eigen::VectorXi& labels) {
  std::string buf;
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    buf.clear();
    auto put = [&buf](double v) {
      if (!buf.empty()) buf += ' ';
      append_double(buf, v);
    };
    auto put_int = [&buf](int v) {
      if (!buf.empty()) buf += ' ';
      buf += std::to_string(v);
    };
    for (int d = 0; d < 3; ++d) put(cloud.positions(i, d));
    if (cloud.colors)
      for (int d = 0; d < 3; ++d) put((*cloud.colors)(i, d));
    if (cloud.semantic_labels || cloud.semantic_scores) put_int(labels(i));
    if (cloud.gt_instance_ids) put_int((*cloud.gt_instance_ids)(i));
    if (cloud.offsets)
      for (int d = 0; d < 3; ++d) put((*cloud.offsets)(i, d));
    if (cloud.features)
      for (Eigen::Index k = 0; k < cloud.features->cols(); ++k) put((*cloud.features)(i, k));
    buf += '\n';
    out << buf;
  }
}

}  // namespace

CloudFormat cloud_format_from_string(const std::string& name) {
  if (name == "columnar") return CloudFormat::kColumnar;
  if (name == "ply" || name == "ply_ascii") return CloudFormat::kPlyAscii;
  throw ValidationError("format: expected 'columnar' or 'ply', got '" + name + "'");
}

PointCloud read_cloud(std::istream& in, CloudFormat format) {
  return format == CloudFormat::kColumnar ? read_columnar(in) : read_ply(in);
}

void write_cloud(std::ostream& out, const PointCloud& cloud, CloudFormat format) {
  cloud.validate();
  Eigen::VectorXi labels;
  const auto cols = columns_of(cloud, &labels);
  if (format == CloudFormat::kColumnar) {
    for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? " " : "") << cols[c].name;
    out << '\n';
  } else {
    out << "ply\nformat ascii 1.0\nelement vertex " << cloud.size() << '\n';
    for (const Column& c : cols)
      out << "property " << (c.integral ? "int" : "double") << ' ' << c.name << '\n';
    out << "end_header\n";
  }
  write_rows(out, cloud, labels);
}

PointCloud load_cloud(const std::filesystem::path& path, CloudFormat format) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  try {
    return read_cloud(in, format);
  } catch (const ParseError& e) {
    throw ParseError(path.string(), e);
  }
}

void save_cloud(const std::filesystem::path& path, const PointCloud& cloud, CloudFormat format) {
  std::ostringstream out;
  write_cloud(out, cloud, format);
  write_text_atomic(path, out.str());
}

nlohmann::json to_json(const std::vector<GroundTruthInstance>& gts) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& g : gts)
    arr.push_back({{"id", g.id},
                   {"class", g.semantic_class},
                   {"indices", g.point_indices},
                   {"centroid", {g.centroid.x(), g.centroid.y(), g.centroid.z()}}});
  return arr;
}

std::vector<GroundTruthInstance> ground_truth_from_json(const nlohmann::json& doc) {
  if (!doc.is_array()) throw ValidationError("ground truth: expected a JSON array");
  std::vector<GroundTruthInstance> out;
  for (std::size_t k = 0; k < doc.size(); ++k) {
    const std::string where = "ground truth[" + std::to_string(k) + "]";
    try {
      GroundTruthInstance g;
      g.id = doc[k].at("id").get<int>();
      g.semantic_class = doc[k].at("class").get<int>();
      g.point_indices = doc[k].at("indices").get<IndexList>();
      const auto c = doc[k].at("centroid").get<std::vector<double>>();
      if (c.size() != 3) throw ValidationError(where + ".centroid: expected 3 values");
      g.centroid = {c[0], c[1], c[2]};
      if (g.point_indices.empty() ||
          !std::is_sorted(g.point_indices.begin(), g.point_indices.end()) ||
          std::adjacent_find(g.point_indices.begin(), g.point_indices.end()) !=
              g.point_indices.end())
        throw ValidationError(where + ".indices: must be nonempty and strictly ascending");
      out.push_back(std::move(g));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(where + ": " + e.what());
    }
  }
  return out;
}

nlohmann::json to_json(const std::vector<Prediction>& preds) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& p : preds)
    arr.push_back(
        {{"class", p.semantic_class}, {"confidence", p.confidence}, {"indices", p.point_indices}});
  return arr;
}

std::vector<Prediction> predictions_from_json(const nlohmann::json& doc) {
  if (!doc.is_array()) throw ValidationError("predictions: expected a JSON array");
  std::vector<Prediction> out;
  for (std::size_t k = 0; k < doc.size(); ++k) {
    const std::string where = "predictions[" + std::to_string(k) + "]";
    try {
      Prediction p;
      p.semantic_class = doc[k].at("class").get<int>();
      p.confidence = doc[k].at("confidence").get<double>();
      p.point_indices = doc[k].at("indices").get<IndexList>();
      if (!(p.confidence >= 0 && p.confidence <= 1))
        throw ValidationError(where + ".confidence: must lie in [0, 1]");
      std::sort(p.point_indices.begin(), p.point_indices.end());
      p.point_indices.erase(std::unique(p.point_indices.begin(), p.point_indices.end()),
                            p.point_indices.end());
      if (p.point_indices.empty()) throw ValidationError(where + ".indices: must be nonempty");
      out.push_back(std::move(p));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(where + ": " + e.what());
    }
  }
  return out;
}

std::string assignment_csv(const std::vector<Prediction>& preds, std::size_t num_points) {
  std::vector<int> owner(num_points, -1);
  for (std::size_t k = preds.size(); k-- > 0;)
    for (int i : preds[k].point_indices) {
      if (i < 0 || static_cast<std::size_t>(i) >= num_points)
        throw InvariantError("prediction references point " + std::to_string(i) +
                             " outside the cloud");
      owner[static_cast<std::size_t>(i)] = static_cast<int>(k);
    }
  std::string out = "point,prediction\n";
  for (std::size_t i = 0; i < num_points; ++i)
    out += std::to_string(i) + ',' + std::to_string(owner[i]) + '\n';
  return out;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json read_json(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp.string() + "'");
    out << content;
    if (!out.flush()) throw IoError("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename '" + tmp.string() + "': " + ec.message());
}

std::string dump_json(const nlohmann::json& doc) { return doc.dump(2) + "\n"; }

}  // namespace hpgseg
