// SPDX-License-Identifier: Apache-2.0
#include "synthpose/animate.hpp"

#include "synthpose/json_io.hpp"
#include "synthpose/math.hpp"

namespace synthpose {

namespace {

constexpr int kCloudFormatVersion = 1;

Vec3 row3(const Points& p, int i) { return p.row(i).transpose(); }

Vec3 posed_face_normal(const Points& v, const Faces& f, int face) {
  return face_normal(row3(v, f(face, 0)), row3(v, f(face, 1)), row3(v, f(face, 2)));
}

}  // namespace

DeformedCloud canonical_cloud(const CanonicalAvatar& avatar, const BodyModel& model) {
  DeformedCloud out;
  out.gaussians = avatar.gaussians;
  out.kept_indices.resize(avatar.size());
  out.face_normals.resize(avatar.size());
  for (std::size_t i = 0; i < avatar.size(); ++i) {
    out.kept_indices[i] = static_cast<int>(i);
    out.face_normals[i] =
        posed_face_normal(model.template_vertices, model.faces, avatar.bindings[i].face);
  }
  return out;
}

DeformedCloud deform_with_mesh(const CanonicalAvatar& avatar, const BodyModel& model,
                               const PosedMesh& mesh, int frame_index) {
  DeformedCloud out;
  out.frame_index = frame_index;
  out.gaussians.resize(avatar.size());
  out.kept_indices.resize(avatar.size());
  out.face_normals.resize(avatar.size());
  for (std::size_t i = 0; i < avatar.size(); ++i) {
    const SurfaceBinding& b = avatar.bindings[i];
    if (b.face < 0 || b.face >= model.face_count())
      throw InvalidArgument("deform: Gaussian " + std::to_string(i) +
                            " is bound to nonexistent face " + std::to_string(b.face));
    Gaussian g = avatar.gaussians[i];
    g.position = binding_position(mesh.vertices, model.faces, b);
    const Vec4 face_rot = matrix_to_quat<double>(mesh.face_frames[static_cast<std::size_t>(b.face)]);
    g.rotation = quat_multiply<double>(face_rot, g.rotation).normalized();
    out.gaussians[i] = g;
    out.kept_indices[i] = static_cast<int>(i);
    out.face_normals[i] = posed_face_normal(mesh.vertices, model.faces, b.face);
  }
  return out;
}

DeformedCloud deform(const CanonicalAvatar& avatar, const BodyModel& model,
                     const PoseParams& params, int frame_index) {
  return deform_with_mesh(avatar, model, pose_mesh(model, params), frame_index);
}

std::vector<Vec3> lbs_expected_positions(const CanonicalAvatar& avatar, const BodyModel& model,
                                         const PoseParams& params) {
  const JointTransforms xf = skinning_transforms(model, params);
  std::vector<Vec3> out(avatar.size());
  for (std::size_t i = 0; i < avatar.size(); ++i) {
    const SurfaceBinding& b = avatar.bindings[i];
    VecX w = VecX::Zero(model.joint_count());
    for (int c = 0; c < 3; ++c)
      w += b.barycentric[c] * model.skinning_weights.row(model.faces(b.face, c)).transpose();
    out[i] = xf.apply(w, avatar.gaussians[i].position);
  }
  return out;
}

DeformedCloud cull_deviants(const DeformedCloud& cloud, const std::vector<Vec3>& expected,
                            double tau) {
  if (expected.size() != cloud.size())
    throw DimensionError("cull_deviants: expected positions do not match cloud size");
  DeformedCloud out;
  out.frame_index = cloud.frame_index;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if ((cloud.gaussians[i].position - expected[i]).norm() > tau) continue;
    out.gaussians.push_back(cloud.gaussians[i]);
    out.kept_indices.push_back(cloud.kept_indices[i]);
    if (!cloud.face_normals.empty()) out.face_normals.push_back(cloud.face_normals[i]);
  }
  return out;
}

double default_cull_tau(const BodyModel& model) {
  double total = 0.0;
  for (int f = 0; f < model.face_count(); ++f) {
    for (int e = 0; e < 3; ++e) {
      total += (row3(model.template_vertices, model.faces(f, e)) -
                row3(model.template_vertices, model.faces(f, (e + 1) % 3)))
                   .norm();
    }
  }
  return 3.0 * total / (3.0 * model.face_count());
}

void save_cloud(const DeformedCloud& cloud, const std::filesystem::path& path) {
  json doc;
  doc["format_version"] = kCloudFormatVersion;
  doc["frame_index"] = cloud.frame_index;
  doc["kept_indices"] = cloud.kept_indices;
  json gs = json::array();
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& g = cloud.gaussians[i];
    json e = {{"position", to_json(g.position)},
              {"rotation", {g.rotation[0], g.rotation[1], g.rotation[2], g.rotation[3]}},
              {"log_scale", to_json(g.log_scale)},
              {"opacity_logit", g.opacity_logit},
              {"color", to_json(g.color)}};
    if (!cloud.face_normals.empty()) e["normal"] = to_json(cloud.face_normals[i]);
    gs.push_back(std::move(e));
  }
  doc["gaussians"] = std::move(gs);
  write_json_file(doc, path);
}

DeformedCloud load_cloud(const std::filesystem::path& path) {
  const json doc = read_json_file(path);
  try {
    if (doc.at("format_version").get<int>() != kCloudFormatVersion)
      throw SchemaError("cloud file: unsupported format_version");
    DeformedCloud c;
    c.frame_index = doc.at("frame_index").get<int>();
    c.kept_indices = doc.at("kept_indices").get<std::vector<int>>();
    for (const auto& j : doc.at("gaussians")) {
      Gaussian g;
      g.position = vec3_from_json(j.at("position"));
      const auto& r = j.at("rotation");
      g.rotation = Vec4(r.at(0).get<double>(), r.at(1).get<double>(), r.at(2).get<double>(),
                        r.at(3).get<double>());
      g.log_scale = vec3_from_json(j.at("log_scale"));
      g.opacity_logit = j.at("opacity_logit").get<double>();
      g.color = vec3_from_json(j.at("color"));
      if (j.contains("normal")) c.face_normals.push_back(vec3_from_json(j.at("normal")));
      c.gaussians.push_back(g);
    }
    if (c.kept_indices.size() != c.gaussians.size() ||
        (!c.face_normals.empty() && c.face_normals.size() != c.gaussians.size()))
      throw SchemaError("cloud file: array lengths disagree");
    return c;
  } catch (const json::exception& e) {
    throw SchemaError("cloud file " + path.string() + ": " + e.what());
  }
}

}  // namespace synthpose
