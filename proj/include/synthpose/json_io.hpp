// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "synthpose/common.hpp"

#include <json.hpp>

#include <filesystem>

namespace synthpose {

using json = nlohmann::json;

json read_json_file(const std::filesystem::path& path);
/// Pretty-printed with a trailing newline; doubles round-trip exactly.
void write_json_file(const json& doc, const std::filesystem::path& path);
void write_text_file(const std::string& text, const std::filesystem::path& path);

json to_json(const Vec3& v);
json to_json(const VecX& v);
json to_json(const Points& p);
json to_json(const Faces& f);
json to_json(const MatX& m);

Vec3 vec3_from_json(const json& j);
VecX vecx_from_json(const json& j);
Points points_from_json(const json& j);
Faces faces_from_json(const json& j);
MatX matx_from_json(const json& j);

}  // namespace synthpose
