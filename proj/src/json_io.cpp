// SPDX-License-Identifier: Apache-2.0
#include "synthpose/json_io.hpp"

#include <fstream>
#include <sstream>

namespace synthpose {

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

void write_text_file(const std::string& text, const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

void write_json_file(const json& doc, const std::filesystem::path& path) {
  write_text_file(doc.dump(2) + "\n", path);
}

json to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

json to_json(const VecX& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json to_json(const Points& p) {
  json a = json::array();
  for (Eigen::Index i = 0; i < p.rows(); ++i) a.push_back({p(i, 0), p(i, 1), p(i, 2)});
  return a;
}

json to_json(const Faces& f) {
  json a = json::array();
  for (Eigen::Index i = 0; i < f.rows(); ++i) a.push_back({f(i, 0), f(i, 1), f(i, 2)});
  return a;
}

json to_json(const MatX& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    a.push_back(std::move(row));
  }
  return a;
}

Vec3 vec3_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw SchemaError("expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

VecX vecx_from_json(const json& j) {
  if (!j.is_array()) throw SchemaError("expected an array of numbers");
  VecX v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

Points points_from_json(const json& j) {
  if (!j.is_array()) throw SchemaError("expected an array of 3-vectors");
  Points p(static_cast<Eigen::Index>(j.size()), 3);
  for (std::size_t i = 0; i < j.size(); ++i)
    p.row(static_cast<Eigen::Index>(i)) = vec3_from_json(j[i]).transpose();
  return p;
}

Faces faces_from_json(const json& j) {
  if (!j.is_array()) throw SchemaError("expected an array of index triples");
  Faces f(static_cast<Eigen::Index>(j.size()), 3);
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != 3) throw SchemaError("expected an index triple");
    for (int c = 0; c < 3; ++c) f(static_cast<Eigen::Index>(i), c) = j[i][c].get<int>();
  }
  return f;
}

MatX matx_from_json(const json& j) {
  if (!j.is_array()) throw SchemaError("expected a matrix (array of rows)");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows == 0 ? 0 : static_cast<Eigen::Index>(j[0].size());
  MatX m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (static_cast<Eigen::Index>(row.size()) != cols) throw SchemaError("ragged matrix");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

}  // namespace synthpose
