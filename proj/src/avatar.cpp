// SPDX-License-Identifier: Apache-2.0
#include "synthpose/avatar.hpp"

#include "synthpose/json_io.hpp"
#include "synthpose/math.hpp"

#include <cmath>
#include <random>

namespace synthpose {

namespace {

constexpr int kAvatarFormatVersion = 1;

Vec3 vertex(const Points& v, int i) { return v.row(i).transpose(); }

// Closest point on triangle abc to p, as barycentric weights.
Vec3 closest_barycentric(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0) return {1, 0, 0};
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0 && d4 <= d3) return {0, 1, 0};
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) {
    const double v = d1 / (d1 - d3);
    return {1 - v, v, 0};
  }
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0 && d5 <= d6) return {0, 0, 1};
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) {
    const double w = d2 / (d2 - d6);
    return {1 - w, 0, w};
  }
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return {0, 1 - w, w};
  }
  const double denom = 1.0 / (va + vb + vc);
  const double v = vb * denom, w = vc * denom;
  return {1 - v - w, v, w};
}

double mean_edge_length(const Points& v, const Faces& f, int face) {
  const Vec3 a = vertex(v, f(face, 0)), b = vertex(v, f(face, 1)), c = vertex(v, f(face, 2));
  return ((b - a).norm() + (c - b).norm() + (a - c).norm()) / 3.0;
}

}  // namespace

Vec3 binding_position(const Points& vertices, const Faces& faces, const SurfaceBinding& b) {
  if (b.face < 0 || b.face >= faces.rows())
    throw InvalidArgument("binding refers to nonexistent face " + std::to_string(b.face));
  const Vec3 p0 = vertex(vertices, faces(b.face, 0));
  const Vec3 p1 = vertex(vertices, faces(b.face, 1));
  const Vec3 p2 = vertex(vertices, faces(b.face, 2));
  const Vec3 surface = b.barycentric[0] * p0 + b.barycentric[1] * p1 + b.barycentric[2] * p2;
  if (b.normal_offset == 0.0) return surface;
  return surface + b.normal_offset * face_normal(p0, p1, p2);
}

SurfaceBinding bind_to_face(const Points& vertices, const Faces& faces, int face, const Vec3& point) {
  const Vec3 a = vertex(vertices, faces(face, 0));
  const Vec3 b = vertex(vertices, faces(face, 1));
  const Vec3 c = vertex(vertices, faces(face, 2));
  SurfaceBinding out;
  out.face = face;
  out.barycentric = closest_barycentric(point, a, b, c);
  const Vec3 on_face = out.barycentric[0] * a + out.barycentric[1] * b + out.barycentric[2] * c;
  out.normal_offset = (point - on_face).dot(face_normal(a, b, c));
  return out;
}

void check_bindings(const CanonicalAvatar& avatar, const BodyModel& model, double tol) {
  if (avatar.gaussians.size() != avatar.bindings.size())
    throw SchemaError("avatar: gaussians and bindings differ in length");
  for (std::size_t i = 0; i < avatar.size(); ++i) {
    const auto& b = avatar.bindings[i];
    if ((b.barycentric.array() < -1e-12).any() || std::abs(b.barycentric.sum() - 1.0) > 1e-6)
      throw SchemaError("avatar: invalid barycentric weights at Gaussian " + std::to_string(i));
    const Vec3 p = binding_position(model.template_vertices, model.faces, b);
    if ((p - avatar.gaussians[i].position).norm() > tol)
      throw SchemaError("avatar: Gaussian " + std::to_string(i) +
                        " position disagrees with its surface binding");
  }
}

CanonicalAvatar init_avatar(const BodyModel& model, int n, std::uint64_t seed) {
  if (n < 1) throw InvalidArgument("init_avatar: n must be >= 1");
  model.validate();
  const auto& v = model.template_vertices;
  const auto& f = model.faces;
  std::vector<double> areas(static_cast<std::size_t>(f.rows()));
  double total = 0.0;
  for (Eigen::Index i = 0; i < f.rows(); ++i) {
    const Vec3 a = vertex(v, f(i, 0)), b = vertex(v, f(i, 1)), c = vertex(v, f(i, 2));
    areas[static_cast<std::size_t>(i)] = 0.5 * (b - a).cross(c - a).norm();
    total += areas[static_cast<std::size_t>(i)];
  }
  if (!(total > 0.0)) throw InvalidArgument("init_avatar: mesh has zero total area");

  std::mt19937_64 rng(seed);
  std::discrete_distribution<int> pick_face(areas.begin(), areas.end());
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  CanonicalAvatar avatar;
  avatar.body_model_id = model.id;
  avatar.gaussians.reserve(static_cast<std::size_t>(n));
  avatar.bindings.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    SurfaceBinding b;
    b.face = pick_face(rng);
    const double r1 = std::sqrt(unit(rng));
    const double r2 = unit(rng);
    b.barycentric = Vec3(1.0 - r1, r1 * (1.0 - r2), r1 * r2);
    Gaussian g;
    g.position = binding_position(v, f, b);
    g.log_scale = Vec3::Constant(std::log(0.5 * mean_edge_length(v, f, b.face)));
    g.opacity_logit = kOpaqueLogit;
    g.color = Vec3::Constant(0.5);
    avatar.gaussians.push_back(g);
    avatar.bindings.push_back(b);
  }
  return avatar;
}

CanonicalAvatar densify_and_prune(const CanonicalAvatar& avatar, const BodyModel& model,
                                  const std::vector<double>& screen_grads, int iter,
                                  const DensifyConfig& cfg) {
  if (screen_grads.size() != avatar.size())
    throw DimensionError("densify_and_prune: screen_grads length " +
                         std::to_string(screen_grads.size()) + " != Gaussian count " +
                         std::to_string(avatar.size()));
  const bool on_schedule = iter >= cfg.start_iter && iter <= cfg.end_iter && cfg.interval > 0 &&
                           (iter - cfg.start_iter) % cfg.interval == 0;
  if (!on_schedule) return avatar;

  const auto& v = model.template_vertices;
  const double diagonal = (v.colwise().maxCoeff() - v.colwise().minCoeff()).norm();
  const double split_scale = cfg.split_scale_fraction * diagonal;
  const double shrink = std::log(cfg.split_factor);

  CanonicalAvatar out;
  out.prompt = avatar.prompt;
  out.body_model_id = avatar.body_model_id;
  auto keep = [&](const Gaussian& g, const SurfaceBinding& b) {
    if (g.opacity() < cfg.opacity_threshold) return;
    out.gaussians.push_back(g);
    out.bindings.push_back(b);
  };

  for (std::size_t i = 0; i < avatar.size(); ++i) {
    const Gaussian& g = avatar.gaussians[i];
    const SurfaceBinding& b = avatar.bindings[i];
    if (!(screen_grads[i] > cfg.grad_threshold)) {
      keep(g, b);
      continue;
    }
    Eigen::Index axis = 0;
    const double largest = g.scale().maxCoeff(&axis);
    if (largest > split_scale) {
      const Vec3 dir = quat_to_matrix<double>(g.rotation.normalized()).col(axis);
      for (double side : {-0.5, 0.5}) {
        Gaussian child = g;
        const SurfaceBinding cb = bind_to_face(v, model.faces, b.face, g.position + side * largest * dir);
        child.position = binding_position(v, model.faces, cb);
        child.log_scale.array() -= shrink;
        keep(child, cb);
      }
    } else {
      keep(g, b);
      keep(g, b);
    }
  }
  return out;
}

void save_avatar(const CanonicalAvatar& avatar, const std::filesystem::path& path) {
  json doc;
  doc["format_version"] = kAvatarFormatVersion;
  doc["count"] = avatar.size();
  doc["body_model_id"] = avatar.body_model_id;
  doc["prompt"] = json::parse(prompt_to_json_line(avatar.prompt));
  json gs = json::array();
  for (std::size_t i = 0; i < avatar.size(); ++i) {
    const auto& g = avatar.gaussians[i];
    const auto& b = avatar.bindings[i];
    gs.push_back({{"position", to_json(g.position)},
                  {"rotation", {g.rotation[0], g.rotation[1], g.rotation[2], g.rotation[3]}},
                  {"log_scale", to_json(g.log_scale)},
                  {"opacity_logit", g.opacity_logit},
                  {"color", to_json(g.color)},
                  {"face", b.face},
                  {"barycentric", to_json(b.barycentric)},
                  {"normal_offset", b.normal_offset}});
  }
  doc["gaussians"] = std::move(gs);
  write_json_file(doc, path);
}

CanonicalAvatar load_avatar(const std::filesystem::path& path) {
  const json doc = read_json_file(path);
  try {
    if (doc.at("format_version").get<int>() != kAvatarFormatVersion)
      throw SchemaError("avatar file: unsupported format_version");
    CanonicalAvatar a;
    a.body_model_id = doc.at("body_model_id").get<std::string>();
    a.prompt = prompt_from_json_line(doc.at("prompt").dump());
    const auto& gs = doc.at("gaussians");
    if (gs.size() != doc.at("count").get<std::size_t>())
      throw SchemaError("avatar file: count does not match gaussians");
    for (const auto& j : gs) {
      Gaussian g;
      g.position = vec3_from_json(j.at("position"));
      const auto& r = j.at("rotation");
      if (r.size() != 4) throw SchemaError("avatar file: rotation must have 4 entries");
      g.rotation = Vec4(r[0].get<double>(), r[1].get<double>(), r[2].get<double>(), r[3].get<double>());
      g.log_scale = vec3_from_json(j.at("log_scale"));
      g.opacity_logit = j.at("opacity_logit").get<double>();
      g.color = vec3_from_json(j.at("color"));
      SurfaceBinding b;
      b.face = j.at("face").get<int>();
      b.barycentric = vec3_from_json(j.at("barycentric"));
      b.normal_offset = j.at("normal_offset").get<double>();
      a.gaussians.push_back(g);
      a.bindings.push_back(b);
    }
    return a;
  } catch (const json::exception& e) {
    throw SchemaError("avatar file " + path.string() + ": " + e.what());
  }
}

}  // namespace synthpose
