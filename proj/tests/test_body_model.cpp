// SPDX-License-Identifier: Apache-2.0
#include "synthpose/body_model.hpp"
#include "synthpose/toy_assets.hpp"

#include <doctest.h>

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

using namespace synthpose;

namespace {

using M3 = std::array<std::array<double, 3>, 3>;
using V3 = std::array<double, 3>;

M3 rodrigues(double x, double y, double z) {
  const double th = std::sqrt(x * x + y * y + z * z);
  M3 r{};
  for (int i = 0; i < 3; ++i) r[i][i] = 1.0;
  if (th == 0.0) return r;
  const double k[3] = {x / th, y / th, z / th};
  const double c = std::cos(th), s = std::sin(th), v = 1.0 - c;
  r[0][0] = c + k[0] * k[0] * v;
  r[0][1] = k[0] * k[1] * v - k[2] * s;
  r[0][2] = k[0] * k[2] * v + k[1] * s;
  r[1][0] = k[1] * k[0] * v + k[2] * s;
  r[1][1] = c + k[1] * k[1] * v;
  r[1][2] = k[1] * k[2] * v - k[0] * s;
  r[2][0] = k[2] * k[0] * v - k[1] * s;
  r[2][1] = k[2] * k[1] * v + k[0] * s;
  r[2][2] = c + k[2] * k[2] * v;
  return r;
}

M3 matmul(const M3& a, const M3& b) {
  M3 o{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) o[i][j] += a[i][k] * b[k][j];
  return o;
}

V3 matvec(const M3& a, const V3& x) {
  V3 o{};
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) o[i] += a[i][k] * x[k];
  return o;
}

// Textbook LBS with 4x4-style rigid transforms, one scalar loop per vertex.
// Assumes parents precede children and zero betas.
Points lbs_oracle(const BodyModel& m, const PoseParams& p) {
  const int k = m.joint_count();
  std::vector<M3> rot(k);
  std::vector<V3> pos(k);  // posed joint location
  for (int j = 0; j < k; ++j) {
    const M3 local = rodrigues(p.body_pose(j, 0), p.body_pose(j, 1), p.body_pose(j, 2));
    const int par = m.kinematic_parents[j];
    const V3 jj = {m.rest_joints(j, 0), m.rest_joints(j, 1), m.rest_joints(j, 2)};
    if (par < 0) {
      rot[j] = local;
      pos[j] = jj;
    } else {
      rot[j] = matmul(rot[par], local);
      const V3 rel = {jj[0] - m.rest_joints(par, 0), jj[1] - m.rest_joints(par, 1),
                      jj[2] - m.rest_joints(par, 2)};
      const V3 d = matvec(rot[par], rel);
      pos[j] = {pos[par][0] + d[0], pos[par][1] + d[1], pos[par][2] + d[2]};
    }
  }
  const M3 g = rodrigues(p.global_orient[0], p.global_orient[1], p.global_orient[2]);
  Points out(m.vertex_count(), 3);
  for (int v = 0; v < m.vertex_count(); ++v) {
    V3 acc{};
    for (int j = 0; j < k; ++j) {
      const double w = m.skinning_weights(v, j);
      const V3 rel = {m.template_vertices(v, 0) - m.rest_joints(j, 0),
                      m.template_vertices(v, 1) - m.rest_joints(j, 1),
                      m.template_vertices(v, 2) - m.rest_joints(j, 2)};
      const V3 r = matvec(rot[j], rel);
      for (int a = 0; a < 3; ++a) acc[a] += w * (r[a] + pos[j][a]);
    }
    const V3 gv = matvec(g, acc);
    for (int a = 0; a < 3; ++a) out(v, a) = gv[a] + p.translation[a];
  }
  return out;
}

double max_abs(const Points& a, const Points& b) { return (a - b).cwiseAbs().maxCoeff(); }

Mat3 random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  const Vec3 axis = Vec3(n(rng), n(rng), n(rng)).normalized();
  return Eigen::AngleAxisd(2.0 * n(rng), axis).toRotationMatrix();
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("synthpose_test_" + name);
}

}  // namespace

TEST_CASE("toy bodies validate") {
  CHECK_NOTHROW(make_chain_body().validate());
  CHECK(make_chain_body().vertex_count() == 32);
  CHECK(make_chain_body().joint_count() == 4);
  CHECK_NOTHROW(make_toy_humanoid().validate());
}

TEST_CASE("validate rejects broken models") {
  SUBCASE("weights do not sum to one") {
    BodyModel m = make_chain_body();
    m.skinning_weights(3, 0) += 0.1;
    CHECK_THROWS_AS(m.validate(), SchemaError);
  }
  SUBCASE("two roots") {
    BodyModel m = make_chain_body();
    m.kinematic_parents[2] = kRootParent;
    CHECK_THROWS_AS(m.validate(), SchemaError);
  }
  SUBCASE("cycle") {
    BodyModel m = make_chain_body();
    m.kinematic_parents[1] = 3;
    CHECK_THROWS_AS(m.validate(), SchemaError);
  }
  SUBCASE("face index out of range") {
    BodyModel m = make_chain_body();
    m.faces(0, 0) = m.vertex_count();
    CHECK_THROWS_AS(m.validate(), SchemaError);
  }
}

TEST_CASE("pose_mesh: identity pose reproduces the template exactly") {
  const BodyModel m = make_chain_body();
  const PosedMesh posed = pose_mesh(m, PoseParams::identity(4, 2));
  CHECK((posed.vertices.array() == m.template_vertices.array()).all());
}

TEST_CASE("pose_mesh: identity pose with translation shifts every vertex") {
  const BodyModel m = make_chain_body();
  PoseParams p = PoseParams::identity(4, 2);
  p.translation = Vec3(0.3, -1.2, 2.5);
  const PosedMesh posed = pose_mesh(m, p);
  for (int v = 0; v < m.vertex_count(); ++v)
    CHECK((posed.vertices.row(v) - m.template_vertices.row(v) - p.translation.transpose())
              .cwiseAbs()
              .maxCoeff() < 1e-12);
}

TEST_CASE("pose_mesh: 90 degree joint bend matches a scalar LBS oracle") {
  const BodyModel m = make_chain_body(2);
  PoseParams p = PoseParams::identity(2, 2);
  p.body_pose.row(1) = Vec3(0, 0, M_PI / 2).transpose();
  CHECK(max_abs(pose_mesh(m, p).vertices, lbs_oracle(m, p)) < 1e-6);
}

TEST_CASE("pose_mesh: random poses match the scalar LBS oracle") {
  const BodyModel m = make_toy_humanoid();
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-0.8, 0.8);
  for (int trial = 0; trial < 10; ++trial) {
    PoseParams p = PoseParams::identity(m.joint_count(), m.shape_count());
    for (int j = 0; j < m.joint_count(); ++j) p.body_pose.row(j) = Vec3(u(rng), u(rng), u(rng)).transpose();
    p.global_orient = Vec3(u(rng), u(rng), u(rng));
    p.translation = Vec3(u(rng), u(rng), u(rng));
    CHECK(max_abs(pose_mesh(m, p).vertices, lbs_oracle(m, p)) < 1e-9);
  }
}

TEST_CASE("pose_mesh: face frames are orthonormal after any pose") {
  const BodyModel m = make_toy_humanoid();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int trial = 0; trial < 5; ++trial) {
    PoseParams p = PoseParams::identity(m.joint_count(), m.shape_count());
    for (int j = 0; j < m.joint_count(); ++j) p.body_pose.row(j) = Vec3(u(rng), u(rng), u(rng)).transpose();
    p.betas = VecX::Constant(m.shape_count(), 0.5);
    for (const Mat3& f : pose_mesh(m, p).face_frames)
      CHECK((f.transpose() * f - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-5);
  }
}

TEST_CASE("pose_mesh: dimension and finiteness errors") {
  const BodyModel m = make_chain_body();
  CHECK_THROWS_AS(pose_mesh(m, PoseParams::identity(3, 2)), DimensionError);
  CHECK_THROWS_AS(pose_mesh(m, PoseParams::identity(4, 1)), DimensionError);
  PoseParams p = PoseParams::identity(4, 2);
  p.translation[1] = std::nan("");
  CHECK_THROWS_AS(pose_mesh(m, p), InvalidArgument);
}

TEST_CASE("rigid equivariance of regressed joints") {
  const BodyModel m = make_toy_humanoid();
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-0.6, 0.6);
  PoseParams p = PoseParams::identity(m.joint_count(), m.shape_count());
  for (int j = 0; j < m.joint_count(); ++j) p.body_pose.row(j) = Vec3(u(rng), u(rng), u(rng)).transpose();
  const Points base = regress_joints(m, pose_mesh(m, p).vertices);
  for (int trial = 0; trial < 5; ++trial) {
    const Mat3 r = random_rotation(rng);
    const Eigen::AngleAxisd aa(r);
    p.global_orient = aa.angle() * aa.axis();
    p.translation = Vec3(u(rng), u(rng), u(rng));
    const Points moved = regress_joints(m, pose_mesh(m, p).vertices);
    for (int j = 0; j < m.joint_count(); ++j) {
      const Vec3 expected = r * base.row(j).transpose() + p.translation;
      CHECK((moved.row(j).transpose() - expected).cwiseAbs().maxCoeff() < 1e-5);
    }
  }
}

TEST_CASE("regress_joints") {
  BodyModel m = make_chain_body();
  Points verts = m.template_vertices;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (Eigen::Index i = 0; i < verts.size(); ++i) verts.data()[i] = u(rng);

  SUBCASE("one-hot row selects a vertex") {
    m.joint_regressor.row(1).setZero();
    m.joint_regressor(1, 7) = 1.0;
    const Points j = regress_joints(m, verts);
    CHECK((j.row(1).array() == verts.row(7).array()).all());
  }
  SUBCASE("uniform row gives the centroid") {
    m.joint_regressor.row(0).setConstant(1.0 / m.vertex_count());
    const Points j = regress_joints(m, verts);
    CHECK((j.row(0) - verts.colwise().mean()).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("random 4x6 regressor against a triple loop") {
    BodyModel small;
    small.joint_regressor = MatX::Zero(4, 6);
    small.template_vertices = Points::Zero(6, 3);
    small.rest_joints = Points::Zero(4, 3);
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 6; ++c) small.joint_regressor(r, c) = 0.5 * (u(rng) + 1.0);
      small.joint_regressor.row(r) /= small.joint_regressor.row(r).sum();
    }
    Points v(6, 3);
    for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = u(rng);
    const Points j = regress_joints(small, v);
    for (int r = 0; r < 4; ++r) {
      for (int a = 0; a < 3; ++a) {
        double acc = 0.0;
        for (int c = 0; c < 6; ++c) acc += small.joint_regressor(r, c) * v(c, a);
        CHECK(std::abs(j(r, a) - acc) < 1e-9);
      }
    }
  }
  CHECK_THROWS_AS(regress_joints(m, Points::Zero(5, 3)), DimensionError);
}

TEST_CASE("normalize_shape") {
  const BodyModel m = make_chain_body();
  const auto with_betas = [&](std::vector<VecX> betas) {
    MotionSequence s;
    for (auto& b : betas) {
      PoseParams p = PoseParams::identity(4, static_cast<int>(b.size()));
      p.betas = b;
      s.frames.push_back(p);
    }
    return s;
  };
  SUBCASE("shared betas are a fixed point") {
    const VecX b = Vec3(0.1, -0.4, 2.0);
    const MotionSequence out = normalize_shape(with_betas({b, b, b}));
    for (const auto& f : out.frames) CHECK((f.betas.array() == b.array()).all());
  }
  SUBCASE("midpoint of two frames") {
    const MotionSequence out = normalize_shape(with_betas({VecX::Zero(3), VecX::Constant(3, 2.0)}));
    for (const auto& f : out.frames) CHECK((f.betas.array() == 1.0).all());
  }
  SUBCASE("random betas against a separate mean loop, idempotent") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<VecX> bs;
    for (int i = 0; i < 5; ++i) bs.push_back(Vec3(n(rng), n(rng), n(rng)));
    MotionSequence seq = with_betas(bs);
    seq.frames[2].translation = Vec3(1, 2, 3);
    const MotionSequence out = normalize_shape(seq);
    for (int a = 0; a < 3; ++a) {
      double acc = 0.0;
      for (const auto& b : bs) acc += b[a];
      acc /= 5.0;
      for (const auto& f : out.frames) CHECK(std::abs(f.betas[a] - acc) < 1e-9);
    }
    CHECK(out.frames[2].translation == Vec3(1, 2, 3));
    const MotionSequence twice = normalize_shape(out);
    for (std::size_t i = 0; i < out.frames.size(); ++i)
      CHECK((twice.frames[i].betas - out.frames[i].betas).cwiseAbs().maxCoeff() <= 1e-12);
  }
  CHECK_THROWS_AS(normalize_shape(MotionSequence{}), InvalidArgument);
}

TEST_CASE("motion files round-trip") {
  const BodyModel m = make_chain_body(2);
  SUBCASE("single frame K=2") {
    MotionSequence seq;
    seq.action_label = "swing";
    seq.subject_id = "s01";
    seq.source_id = "clip-a";
    PoseParams p = PoseParams::identity(2, 2);
    p.body_pose(1, 2) = 0.25;
    p.translation = Vec3(0.1, 0.2, 0.3);
    p.betas = Eigen::Vector2d(0.5, -0.5);
    seq.frames.push_back(p);
    const auto path = temp_path("motion1.json");
    save_motion(seq, path);
    const MotionSequence back = load_motion(path);
    REQUIRE(back.frames.size() == 1);
    CHECK(back.action_label == "swing");
    CHECK(back.subject_id == "s01");
    CHECK(back.source_id == "clip-a");
    CHECK(back.frames[0].body_pose == p.body_pose);
    CHECK(back.frames[0].translation == p.translation);
    CHECK(back.frames[0].betas == p.betas);
  }
  SUBCASE("generated motion survives write/read bit-exactly") {
    const BodyModel h = make_toy_humanoid();
    const MotionSequence seq = make_toy_motion(h, "throw", 12, "s02", 99);
    const auto path = temp_path("motion2.json");
    save_motion(seq, path);
    const MotionSequence back = load_motion(path);
    REQUIRE(back.frames.size() == seq.frames.size());
    for (std::size_t i = 0; i < seq.frames.size(); ++i) {
      CHECK(back.frames[i].body_pose == seq.frames[i].body_pose);
      CHECK(back.frames[i].global_orient == seq.frames[i].global_orient);
      CHECK(back.frames[i].translation == seq.frames[i].translation);
      CHECK(back.frames[i].betas == seq.frames[i].betas);
    }
  }
  SUBCASE("frame with K=3 in a K=2 file") {
    const auto path = temp_path("motion_bad.json");
    std::ofstream(path) << R"({"format_version":1,"K":2,"B":0,"action_label":"run","subject_id":"s",)"
                        << R"("frames":[{"body_pose":[[0,0,0],[0,0,0],[0,0,0]],)"
                        << R"("global_orient":[0,0,0],"translation":[0,0,0],"betas":[]}]})";
    CHECK_THROWS_AS(load_motion(path), SchemaError);
  }
  CHECK_THROWS_AS(load_motion(temp_path("does_not_exist.json")), IoError);
}

TEST_CASE("body model files round-trip") {
  const BodyModel m = make_toy_humanoid();
  const auto path = temp_path("body.json");
  save_body_model(m, path);
  const BodyModel back = load_body_model(path);
  CHECK(back.id == m.id);
  CHECK(back.template_vertices == m.template_vertices);
  CHECK(back.faces == m.faces);
  CHECK(back.rest_joints == m.rest_joints);
  CHECK(back.skinning_weights == m.skinning_weights);
  CHECK(back.joint_regressor == m.joint_regressor);
  CHECK(back.kinematic_parents == m.kinematic_parents);
  CHECK(back.shape_basis == m.shape_basis);
}
