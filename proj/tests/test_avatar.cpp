// SPDX-License-Identifier: Apache-2.0
#include "synthpose/avatar.hpp"
#include "synthpose/math.hpp"
#include "synthpose/toy_assets.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>

using namespace synthpose;

namespace {

// One joint, rigidly skinned, given vertices and faces.
BodyModel flat_model(const Points& verts, const Faces& faces) {
  BodyModel m;
  m.id = "flat";
  m.template_vertices = verts;
  m.faces = faces;
  m.rest_joints = Points::Zero(1, 3);
  m.skinning_weights = MatX::Ones(verts.rows(), 1);
  m.joint_regressor = MatX::Constant(1, verts.rows(), 1.0 / static_cast<double>(verts.rows()));
  m.kinematic_parents = {kRootParent};
  m.shape_basis = MatX::Zero(3 * verts.rows(), 0);
  m.validate();
  return m;
}

BodyModel single_triangle() {
  Points v(3, 3);
  v << 0, 0, 0, 1, 0, 0, 0, 1, 0;
  Faces f(1, 3);
  f << 0, 1, 2;
  return flat_model(v, f);
}

// Two triangles with area 3:1 (legs 3x2 and 1x2 in the z = 0 plane).
BodyModel area_ratio_model() {
  Points v(6, 3);
  v << 0, 0, 0, 3, 0, 0, 0, 2, 0,  //
      10, 0, 0, 11, 0, 0, 10, 2, 0;
  Faces f(2, 3);
  f << 0, 1, 2, 3, 4, 5;
  return flat_model(v, f);
}

}  // namespace

TEST_CASE("init_avatar on a single triangle") {
  const BodyModel m = single_triangle();
  const CanonicalAvatar a = init_avatar(m, 10, 1);
  REQUIRE(a.size() == 10);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& b = a.bindings[i];
    CHECK(b.face == 0);
    CHECK((b.barycentric.array() >= 0.0).all());
    CHECK(std::abs(b.barycentric.sum() - 1.0) < 1e-6);
    CHECK(b.normal_offset == 0.0);
    CHECK(a.gaussians[i].opacity() == 1.0);
    const Vec3& p = a.gaussians[i].position;
    CHECK(p.z() == 0.0);
    CHECK(p.x() >= 0.0);
    CHECK(p.y() >= 0.0);
    CHECK(p.x() + p.y() <= 1.0 + 1e-12);
  }
}

TEST_CASE("init_avatar samples faces in proportion to area") {
  const BodyModel m = area_ratio_model();
  const CanonicalAvatar a = init_avatar(m, 4000, 2024);
  double counts[2] = {0, 0};
  for (const auto& b : a.bindings) counts[b.face] += 1.0;
  const double expected[2] = {3000.0, 1000.0};
  double chi2 = 0.0;
  for (int f = 0; f < 2; ++f) chi2 += std::pow(counts[f] - expected[f], 2) / expected[f];
  // Chi-square, 1 degree of freedom, critical value at p = 0.001.
  CHECK(chi2 < 10.828);
}

TEST_CASE("init_avatar count boundaries") {
  const BodyModel m = make_chain_body();
  CHECK_THROWS_AS(init_avatar(m, 0, 1), InvalidArgument);
  CHECK(init_avatar(m, 1, 1).size() == 1);
}

TEST_CASE("init_avatar rejects a zero-area mesh") {
  Points v(3, 3);
  v << 0, 0, 0, 1, 0, 0, 2, 0, 0;
  Faces f(1, 3);
  f << 0, 1, 2;
  const BodyModel m = flat_model(v, f);
  CHECK_THROWS(init_avatar(m, 5, 1));
}

TEST_CASE("init_avatar is deterministic and binding-consistent") {
  const BodyModel m = make_toy_humanoid();
  const CanonicalAvatar a = init_avatar(m, 500, 7);
  const CanonicalAvatar b = init_avatar(m, 500, 7);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.gaussians[i].position == b.gaussians[i].position);
    CHECK(a.bindings[i].barycentric == b.bindings[i].barycentric);
  }
  CHECK_NOTHROW(check_bindings(a, m));
  const CanonicalAvatar c = init_avatar(m, 500, 8);
  CHECK(c.gaussians[0].position != a.gaussians[0].position);
}

TEST_CASE("bind_to_face recovers points on and off the surface") {
  const BodyModel m = single_triangle();
  SUBCASE("interior point above the face") {
    const SurfaceBinding b = bind_to_face(m.template_vertices, m.faces, 0, Vec3(0.2, 0.3, 0.05));
    CHECK(b.barycentric.isApprox(Vec3(0.5, 0.2, 0.3), 1e-12));
    CHECK(b.normal_offset == doctest::Approx(0.05));
    CHECK((binding_position(m.template_vertices, m.faces, b) - Vec3(0.2, 0.3, 0.05)).norm() < 1e-12);
  }
  SUBCASE("point outside the triangle clamps to an edge") {
    const SurfaceBinding b = bind_to_face(m.template_vertices, m.faces, 0, Vec3(0.5, -0.4, 0.0));
    CHECK((b.barycentric.array() >= 0.0).all());
    CHECK(b.barycentric.sum() == doctest::Approx(1.0));
    CHECK((binding_position(m.template_vertices, m.faces, b) - Vec3(0.5, 0.0, 0.0)).norm() < 1e-12);
  }
}

TEST_CASE("densify_and_prune") {
  const BodyModel m = make_toy_humanoid();
  CanonicalAvatar a = init_avatar(m, 20, 3);
  const DensifyConfig cfg;
  std::vector<double> grads(a.size(), 0.0);

  SUBCASE("off schedule returns the input unchanged") {
    a.gaussians[0].opacity_logit = -10.0;
    std::fill(grads.begin(), grads.end(), 1.0);
    for (int iter : {250, 350, 900}) {
      const CanonicalAvatar out = densify_and_prune(a, m, grads, iter, cfg);
      REQUIRE(out.size() == a.size());
      for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(out.gaussians[i].position == a.gaussians[i].position);
        CHECK(out.gaussians[i].opacity_logit == a.gaussians[i].opacity_logit);
      }
    }
  }
  SUBCASE("transparent Gaussian is pruned") {
    a.gaussians[4].opacity_logit = std::log(0.001 / 0.999);
    const CanonicalAvatar out = densify_and_prune(a, m, grads, 400, cfg);
    CHECK(out.size() == a.size() - 1);
    CHECK(out.gaussians[4].position == a.gaussians[5].position);
  }
  SUBCASE("large high-gradient Gaussian is split in two") {
    const auto& v = m.template_vertices;
    const double diag = (v.colwise().maxCoeff() - v.colwise().minCoeff()).norm();
    a.gaussians[2].log_scale = Vec3(std::log(0.05 * diag), std::log(0.01 * diag), std::log(0.005 * diag));
    grads[2] = 10.0 * cfg.grad_threshold;
    const CanonicalAvatar out = densify_and_prune(a, m, grads, 400, cfg);
    REQUIRE(out.size() == a.size() + 1);
    for (int k : {2, 3}) {
      CHECK((out.gaussians[k].log_scale - (a.gaussians[2].log_scale.array() - std::log(1.6)).matrix())
                .cwiseAbs()
                .maxCoeff() < 1e-12);
      CHECK(out.bindings[k].face == a.bindings[2].face);
    }
    CHECK_NOTHROW(check_bindings(out, m));
  }
  SUBCASE("small high-gradient Gaussian is cloned") {
    a.gaussians[6].log_scale = Vec3::Constant(std::log(1e-4));
    grads[6] = 10.0 * cfg.grad_threshold;
    const CanonicalAvatar out = densify_and_prune(a, m, grads, 500, cfg);
    REQUIRE(out.size() == a.size() + 1);
    CHECK(out.gaussians[6].position == out.gaussians[7].position);
    CHECK(out.gaussians[7].log_scale == a.gaussians[6].log_scale);
  }
  SUBCASE("rotations stay unit and bindings valid after densify") {
    std::fill(grads.begin(), grads.end(), 1.0);
    for (auto& g : a.gaussians) g.log_scale = Vec3(-1.0, -3.0, -4.0);
    const CanonicalAvatar out = densify_and_prune(a, m, grads, 300, cfg);
    CHECK(out.size() == 2 * a.size());
    for (const auto& g : out.gaussians) CHECK(std::abs(g.rotation.norm() - 1.0) < 1e-6);
    CHECK_NOTHROW(check_bindings(out, m));
  }
  CHECK_THROWS_AS(densify_and_prune(a, m, std::vector<double>(3), 400, cfg), DimensionError);
}

TEST_CASE("avatar files round-trip losslessly") {
  const BodyModel m = make_toy_humanoid();
  CanonicalAvatar a = init_avatar(m, 50, 11);
  a.gaussians[3].color = Vec3(0.1, 0.2, 0.3000000000000001);
  a.gaussians[3].rotation = Vec4(0.5, 0.5, -0.5, 0.5);
  a.prompt.sentence = "test prompt";
  a.prompt.scenario = "tennis";
  const auto path = std::filesystem::temp_directory_path() / "synthpose_test_avatar.json";
  save_avatar(a, path);
  const CanonicalAvatar b = load_avatar(path);
  REQUIRE(b.size() == a.size());
  CHECK(b.body_model_id == a.body_model_id);
  CHECK(b.prompt.sentence == "test prompt");
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(b.gaussians[i].position == a.gaussians[i].position);
    CHECK(b.gaussians[i].rotation == a.gaussians[i].rotation);
    CHECK(b.gaussians[i].log_scale == a.gaussians[i].log_scale);
    CHECK(b.gaussians[i].opacity_logit == a.gaussians[i].opacity_logit);
    CHECK(b.gaussians[i].color == a.gaussians[i].color);
    CHECK(b.bindings[i].face == a.bindings[i].face);
    CHECK(b.bindings[i].barycentric == a.bindings[i].barycentric);
    CHECK(b.bindings[i].normal_offset == a.bindings[i].normal_offset);
  }
}
