// SPDX-License-Identifier: Apache-2.0
#include "synthpose/toy_assets.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

namespace synthpose {

namespace {

struct Segment {
  std::string name;
  int parent;
  Vec3 joint;
  Vec3 direction;
  double length;
  double half_width;
};

// Tube per segment: `rings(seg)` + 1 cross-sections of `sides` vertices
// along the bone, side quads between them and a fan cap at each end. Four
// sides give a square of half width `half_width`, more sides a polygon of
// that radius. The joint regressor averages the first cross-section.
template <typename Rings>
BodyModel build_from_segments(const std::string& id, const std::vector<Segment>& segs,
                              double parent_blend, int sides, Rings rings) {
  const int k = static_cast<int>(segs.size());
  const int ns = sides;
  std::vector<int> vbase(k + 1, 0), fbase(k + 1, 0), nr(k);
  for (int s = 0; s < k; ++s) {
    nr[s] = std::max(1, rings(segs[s]));
    vbase[s + 1] = vbase[s] + ns * (nr[s] + 1);
    fbase[s + 1] = fbase[s] + 2 * ns * nr[s] + 2 * (ns - 2);
  }
  std::vector<std::array<double, 2>> ring;
  if (ns == 4) {
    ring = {{1, 1}, {-1, 1}, {-1, -1}, {1, -1}};
  } else {
    for (int c = 0; c < ns; ++c) {
      const double t = 2.0 * std::numbers::pi * c / ns;
      ring.push_back({std::cos(t), std::sin(t)});
    }
  }
  const int m = vbase[k];
  BodyModel model;
  model.id = id;
  model.template_vertices.resize(m, 3);
  model.faces.resize(fbase[k], 3);
  model.rest_joints.resize(k, 3);
  model.skinning_weights = MatX::Zero(m, k);
  model.joint_regressor = MatX::Zero(k, m);
  model.kinematic_parents.resize(k);
  model.shape_basis = MatX::Zero(3 * m, 2);

  for (int s = 0; s < k; ++s) {
    const Segment& seg = segs[s];
    const Vec3 d = seg.direction.normalized();
    Vec3 a = d.cross(Vec3::UnitZ());
    if (a.norm() < 1e-6) a = d.cross(Vec3::UnitX());
    a.normalize();
    const Vec3 b = d.cross(a);
    model.rest_joints.row(s) = seg.joint.transpose();
    model.kinematic_parents[s] = seg.parent;
    const int base = vbase[s];
    for (int r = 0; r <= nr[s]; ++r) {
      for (int c = 0; c < ns; ++c) {
        const int v = base + ns * r + c;
        const Vec3 offset = seg.half_width * (ring[c][0] * a + ring[c][1] * b);
        const Vec3 p = seg.joint + (seg.length * r / nr[s]) * d + offset;
        model.template_vertices.row(v) = p.transpose();
        if (r == 0 && seg.parent != kRootParent) {
          model.skinning_weights(v, s) = 1.0 - parent_blend;
          model.skinning_weights(v, seg.parent) = parent_blend;
        } else {
          model.skinning_weights(v, s) = 1.0;
        }
        if (r == 0) model.joint_regressor(s, v) = 1.0 / ns;
        // Shape 0 stretches along world up, shape 1 thickens the segment.
        model.shape_basis(3 * v + 1, 0) = 0.1 * p.y();
        const Vec3 girth = 0.25 * offset;
        for (int ax = 0; ax < 3; ++ax) model.shape_basis(3 * v + ax, 1) = girth[ax];
      }
    }
    std::vector<std::array<int, 3>> tris;
    for (int r = 0; r < nr[s]; ++r) {
      const int lo = base + ns * r, hi = lo + ns;
      for (int c = 0; c < ns; ++c) {
        const int c1 = (c + 1) % ns;
        tris.push_back({lo + c, lo + c1, hi + c1});
        tris.push_back({lo + c, hi + c1, hi + c});
      }
    }
    const std::size_t side_count = tris.size();
    const int last = base + ns * nr[s];
    for (int c = 1; c + 1 < ns; ++c) tris.push_back({base, base + c, base + c + 1});
    for (int c = 1; c + 1 < ns; ++c) tris.push_back({last, last + c, last + c + 1});
    const Vec3 center = seg.joint + 0.5 * seg.length * d;
    for (std::size_t t = 0; t < tris.size(); ++t) {
      auto tri = tris[t];
      const Vec3 p0 = model.template_vertices.row(tri[0]).transpose();
      const Vec3 p1 = model.template_vertices.row(tri[1]).transpose();
      const Vec3 p2 = model.template_vertices.row(tri[2]).transpose();
      const Vec3 n = (p1 - p0).cross(p2 - p0);
      // Side faces point away from the bone axis, caps away from the center.
      const Vec3 centroid = (p0 + p1 + p2) / 3.0;
      const Vec3 rel = centroid - center;
      const bool cap = t >= side_count;
      const Vec3 out = cap ? rel : Vec3(rel - rel.dot(d) * d);
      if (n.dot(out) < 0) std::swap(tri[1], tri[2]);
      model.faces.row(fbase[s] + static_cast<int>(t)) << tri[0], tri[1], tri[2];
    }
  }
  model.validate();
  return model;
}

}  // namespace

BodyModel make_chain_body(int joints, double segment_length, double half_width) {
  if (joints < 1) throw InvalidArgument("make_chain_body: need at least one joint");
  std::vector<Segment> segs;
  for (int j = 0; j < joints; ++j) {
    segs.push_back({"joint" + std::to_string(j), j - 1, Vec3(0, j * segment_length, 0),
                    Vec3::UnitY(), segment_length, half_width});
  }
  return build_from_segments("chain" + std::to_string(joints), segs, 0.5, 4,
                             [](const Segment&) { return 1; });
}

const std::vector<std::string>& toy_humanoid_joint_names() {
  static const std::vector<std::string> names = {
      "pelvis",     "spine",     "head",         "left_hip",  "left_knee",   "right_hip",
      "right_knee", "left_shoulder", "left_elbow", "right_shoulder", "right_elbow"};
  return names;
}

BodyModel make_toy_humanoid() {
  const Vec3 up = Vec3::UnitY();
  const Vec3 down = -Vec3::UnitY();
  const Vec3 larm = Vec3(0.25, -1.0, 0.0).normalized();
  const Vec3 rarm = Vec3(-0.25, -1.0, 0.0).normalized();
  const Vec3 lsh(0.19, 1.42, 0.0);
  const Vec3 rsh(-0.19, 1.42, 0.0);
  const auto& n = toy_humanoid_joint_names();
  const std::vector<Segment> segs = {
      {n[0], kRootParent, Vec3(0, 0.92, 0), up, 0.22, 0.14},
      {n[1], 0, Vec3(0, 1.14, 0), up, 0.34, 0.13},
      {n[2], 1, Vec3(0, 1.48, 0), up, 0.26, 0.09},
      {n[3], 0, Vec3(0.09, 0.92, 0), down, 0.44, 0.065},
      {n[4], 3, Vec3(0.09, 0.48, 0), down, 0.46, 0.055},
      {n[5], 0, Vec3(-0.09, 0.92, 0), down, 0.44, 0.065},
      {n[6], 5, Vec3(-0.09, 0.48, 0), down, 0.46, 0.055},
      {n[7], 1, lsh, larm, 0.30, 0.045},
      {n[8], 7, lsh + 0.30 * larm, larm, 0.28, 0.04},
      {n[9], 1, rsh, rarm, 0.30, 0.045},
      {n[10], 9, rsh + 0.30 * rarm, rarm, 0.28, 0.04},
  };
  return build_from_segments("toy_humanoid", segs, 0.4, 8, [](const Segment& s) {
    return static_cast<int>(std::ceil(s.length / (1.0 * s.half_width)));
  });
}

MotionSequence make_toy_motion(const BodyModel& model, const std::string& action, int frames,
                               const std::string& subject_id, std::uint64_t seed) {
  if (model.joint_count() != 11) throw InvalidArgument("make_toy_motion: needs the toy humanoid");
  if (frames < 1) throw InvalidArgument("make_toy_motion: frames must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  VecX subject_betas(model.shape_count());
  for (Eigen::Index i = 0; i < subject_betas.size(); ++i) subject_betas[i] = unit(rng);
  const double yaw0 = std::numbers::pi * unit(rng);
  const double period = 24.0 + 8.0 * unit(rng);

  MotionSequence seq;
  seq.action_label = action;
  seq.subject_id = subject_id;
  seq.source_id = "procedural:" + action + ":" + std::to_string(seed);
  for (int f = 0; f < frames; ++f) {
    const double ph = 2.0 * std::numbers::pi * f / period;
    const double s = std::sin(ph);
    const double c = std::cos(ph);
    PoseParams p = PoseParams::identity(model.joint_count(), model.shape_count());
    auto set = [&](int j, double x, double y, double z) { p.body_pose.row(j) << x, y, z; };
    if (action == "run") {
      set(3, -0.7 * s, 0, 0);
      set(5, 0.7 * s, 0, 0);
      set(4, 0.5 * (1 + c), 0, 0);
      set(6, 0.5 * (1 - c), 0, 0);
      set(7, 0.6 * s, 0, 0.1);
      set(9, -0.6 * s, 0, -0.1);
      set(8, -0.9, 0, 0);
      set(10, -0.9, 0, 0);
      set(1, 0.15, 0, 0);
      p.translation = Vec3(0, 0.04 * std::abs(s), 0);
    } else if (action == "swing") {
      set(1, 0, 0.9 * s, 0);
      set(7, -1.0 - 0.3 * c, 0.2 * s, -0.4);
      set(9, -1.0 - 0.3 * c, 0.2 * s, 0.4);
      set(8, -0.4, 0, 0);
      set(10, -0.4, 0, 0);
      set(3, -0.2, 0, 0.1);
      set(5, -0.2, 0, -0.1);
      set(4, 0.3, 0, 0);
      set(6, 0.3, 0, 0);
    } else if (action == "jump") {
      const double air = std::max(0.0, s);
      const double crouch = std::max(0.0, -s);
      set(3, -0.9 * crouch, 0, 0);
      set(5, -0.9 * crouch, 0, 0);
      set(4, 1.4 * crouch, 0, 0);
      set(6, 1.4 * crouch, 0, 0);
      set(7, -2.2 * air, 0, 0.2);
      set(9, -2.2 * air, 0, -0.2);
      p.translation = Vec3(0, 0.35 * air - 0.25 * crouch, 0);
    } else if (action == "throw") {
      set(1, 0, 0.6 * s, 0);
      set(9, -1.6 - 0.8 * s, 0, -0.3);
      set(10, -1.0 * (1 + c) * 0.5, 0, 0);
      set(7, -0.5 + 0.4 * s, 0, 0.2);
      set(3, -0.4 * s, 0, 0);
      set(5, 0.3 * s, 0, 0);
      set(4, 0.3, 0, 0);
      set(6, 0.3, 0, 0);
    } else {
      throw InvalidArgument("make_toy_motion: unknown action '" + action + "'");
    }
    p.global_orient = Vec3(0, yaw0 + 0.1 * s, 0);
    p.betas = subject_betas;
    for (Eigen::Index i = 0; i < p.betas.size(); ++i) p.betas[i] += 0.05 * unit(rng);
    seq.frames.push_back(std::move(p));
  }
  return seq;
}

}  // namespace synthpose
