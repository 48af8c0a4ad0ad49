// SPDX-License-Identifier: Apache-2.0
#include "synthpose/guidance.hpp"
#include "synthpose/toy_assets.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>
#include <sstream>

using namespace synthpose;
using namespace synthpose::testing;

namespace {

struct Inputs {
  Image rgb, depth, alpha, noise_rgb, noise_depth;
  PoseMap pose;
  PromptTemplate prompt;
};

Inputs gray_inputs(int size, std::uint64_t seed) {
  Inputs in;
  in.rgb = Image(size, size, 3, 0.5);
  in.depth = random_image(size, size, 1, seed);
  in.alpha = Image(size, size, 1, 1.0);
  in.noise_rgb = random_image(size, size, 3, seed + 1);
  in.noise_depth = random_image(size, size, 1, seed + 2);
  in.pose.image = Image(size, size, 3);
  return in;
}

SdsGradients run_sds(DenoiserInterface& d, const Inputs& in, const GuidanceConfig& cfg, int t = 500) {
  return sds_pixel_gradients(d, in.rgb, in.depth, in.alpha, in.pose, in.prompt, t, in.noise_rgb,
                             in.noise_depth, cfg);
}

CameraSample front_view() {
  CameraSamplerConfig c;
  c.azimuth_deg = {20, 20};
  c.elevation_deg = {10, 10};
  c.radius = {3.0, 3.0};
  return sample_camera(0, c);
}

bool same_avatar(const CanonicalAvatar& a, const CanonicalAvatar& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Gaussian &x = a.gaussians[i], &y = b.gaussians[i];
    if (x.position != y.position || x.rotation != y.rotation || x.log_scale != y.log_scale ||
        x.opacity_logit != y.opacity_logit || x.color != y.color)
      return false;
  }
  return true;
}

}  // namespace

TEST_CASE("mock denoisers") {
  const Inputs in = gray_inputs(8, 1);
  const Image noisy = in.rgb;
  const DenoiseRequest req{noisy, in.depth, 10, in.pose, in.prompt,
                           in.rgb, in.depth, in.alpha, in.noise_rgb, in.noise_depth};
  SUBCASE("perfect returns the noise bit-for-bit") {
    const auto eps = mock_denoiser({MockMode::perfect})->predict_noise(req);
    CHECK((eps.eps_rgb.data == in.noise_rgb.data).all());
    CHECK((eps.eps_depth.data == in.noise_depth.data).all());
  }
  SUBCASE("constant bias") {
    const auto eps = mock_denoiser({MockMode::constant_bias, 0.1})->predict_noise(req);
    CHECK(((eps.eps_rgb.data - in.noise_rgb.data) - 0.1).abs().maxCoeff() < 1e-15);
    CHECK(((eps.eps_depth.data - in.noise_depth.data) - 0.1).abs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("sds_pixel_gradients") {
  const Inputs in = gray_inputs(16, 3);
  GuidanceConfig cfg;
  SUBCASE("perfect denoiser gives exactly zero") {
    auto d = mock_denoiser({MockMode::perfect});
    const SdsGradients g = run_sds(*d, in, cfg);
    CHECK((g.grad_rgb.data == 0.0).all());
    CHECK((g.grad_depth.data == 0.0).all());
  }
  SUBCASE("lambda_depth = 0 silences the depth branch") {
    cfg.lambda_depth = 0.0;
    auto d = mock_denoiser({MockMode::constant_bias, 3.7});
    CHECK((run_sds(*d, in, cfg).grad_depth.data == 0.0).all());
  }
  SUBCASE("constant bias closed form") {
    for (const char* schedule : {"constant", "one_minus_alpha_bar"}) {
      cfg.noise_weight = schedule;
      auto d = mock_denoiser({MockMode::constant_bias, 0.25});
      const SdsGradients g = run_sds(*d, in, cfg, 300);
      const double w = std::string(schedule) == "constant" ? 1.0 : 1.0 - alpha_bar(300);
      CHECK((g.grad_rgb.data - 0.5 * w * 0.25).abs().maxCoeff() < 1e-12);
      CHECK((g.grad_depth.data - 0.5 * w * 0.25).abs().maxCoeff() < 1e-12);
    }
  }
  SUBCASE("doubling a lambda doubles its branch exactly") {
    auto d = mock_denoiser({MockMode::color_target, 0.0, Vec3(1, 0, 0)});
    const SdsGradients base = run_sds(*d, in, cfg);
    GuidanceConfig twice = cfg;
    twice.lambda_rgb *= 2.0;
    const SdsGradients doubled = run_sds(*d, in, twice);
    CHECK((doubled.grad_rgb.data == 2.0 * base.grad_rgb.data).all());
    CHECK((doubled.grad_depth.data == base.grad_depth.data).all());
  }
  SUBCASE("color target pushes red up and the rest down") {
    auto d = mock_denoiser({MockMode::color_target, 0.0, Vec3(1, 0, 0)});
    const SdsGradients g = run_sds(*d, in, cfg);
    for (Eigen::Index p = 0; p < g.grad_rgb.pixel_count(); ++p) {
      CHECK(g.grad_rgb.data[3 * p] < 0.0);
      CHECK(g.grad_rgb.data[3 * p + 1] > 0.0);
      CHECK(g.grad_rgb.data[3 * p + 2] > 0.0);
    }
  }
  SUBCASE("errors") {
    auto d = mock_denoiser({MockMode::perfect});
    CHECK_THROWS_AS(run_sds(*d, in, cfg, cfg.t_max + 1), InvalidArgument);
    Inputs bad = in;
    bad.noise_rgb = Image(8, 8, 3);
    CHECK_THROWS_AS(run_sds(*d, bad, cfg), DimensionError);
  }
}

TEST_CASE("end-to-end SDS gradient matches finite differences of the surrogate") {
  const Camera cam = small_camera(32);
  const auto cloud = random_cloud(20, 99);
  const RenderOutput r0 = rasterize(std::span<const Gaussian>(cloud), cam);
  const DepthNormalization norm = depth_normalization(r0);
  CHECK(norm.zmax > norm.zmin);
  const SdsGradients g{random_image(32, 32, 3, 5), random_image(32, 32, 1, 6)};
  const auto analytic = sds_parameter_gradients(std::span<const Gaussian>(cloud), cam, g, norm);
  const auto errors = finite_difference_errors(cloud, analytic, [&](const std::vector<Gaussian>& c) {
    return sds_surrogate_loss(rasterize(std::span<const Gaussian>(c), cam), g, norm);
  });
  for (int group = 0; group < 5; ++group) {
    INFO(kGroupNames[group]);
    CHECK(errors[group] < 1e-3);
  }
}

TEST_CASE("normalized depth spans [0, 1] over the opaque region") {
  const Camera cam = small_camera(32);
  auto cloud = random_cloud(40, 4);
  for (auto& g : cloud) g.opacity_logit = kOpaqueLogit;
  const RenderOutput r = rasterize(std::span<const Gaussian>(cloud), cam);
  const Image d = normalize_depth(r, depth_normalization(r));
  double lo = 1e9, hi = -1e9;
  for (Eigen::Index i = 0; i < d.data.size(); ++i) {
    if (r.alpha.data[i] <= 0.5) continue;
    lo = std::min(lo, d.data[i] / r.alpha.data[i]);
    hi = std::max(hi, d.data[i] / r.alpha.data[i]);
  }
  CHECK(lo == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(hi == doctest::Approx(1.0));
}

TEST_CASE("pose map marks projected joints") {
  const BodyModel m = make_toy_humanoid();
  Camera cam = orbit_camera(intrinsics_from_fov(60, 64, 64), Vec3(0, 0.9, 0), 0, 0, 3.0);
  const PoseMap map = render_pose_map(m, cam);
  CHECK(map.image.width == 64);
  for (int j = 0; j < m.joint_count(); ++j) {
    const Projection p = project(cam, m.rest_joints.row(j).transpose());
    const int x = static_cast<int>(std::lround(p.u)), y = static_cast<int>(std::lround(p.v));
    CHECK(map.image(x, y, 0) + map.image(x, y, 1) + map.image(x, y, 2) > 0.0);
  }
  CHECK(map.image(0, 0, 0) == 0.0);
}

TEST_CASE("optimize_avatar") {
  const BodyModel m = make_toy_humanoid();
  const CanonicalAvatar start = init_avatar(m, 200, 1);
  const PromptTemplate prompt;
  GuidanceConfig cfg;
  cfg.resolution = 32;
  cfg.iterations = 15;

  SUBCASE("zero iterations returns the input") {
    cfg.iterations = 0;
    auto d = mock_denoiser({MockMode::color_target, 0.0, Vec3(1, 0, 0)});
    CHECK(same_avatar(optimize_avatar(start, m, *d, prompt, cfg, 3), start));
  }
  SUBCASE("perfect denoiser is a fixed point, including the densify schedule") {
    cfg.densify_config.start_iter = 5;
    cfg.densify_config.interval = 5;
    auto d = mock_denoiser({MockMode::perfect});
    CHECK(same_avatar(optimize_avatar(start, m, *d, prompt, cfg, 3), start));
  }
  SUBCASE("frozen color group stays put") {
    cfg.trainable.color = false;
    auto d = mock_denoiser({MockMode::color_target, 0.0, Vec3(1, 0, 0)});
    const CanonicalAvatar out = optimize_avatar(start, m, *d, prompt, cfg, 3);
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out.gaussians[i].color == start.gaussians[i].color);
  }
  SUBCASE("deterministic given the seed, bindings stay consistent") {
    auto d = mock_denoiser({MockMode::color_target, 0.0, Vec3(0.2, 0.8, 0.1)});
    const CanonicalAvatar a = optimize_avatar(start, m, *d, prompt, cfg, 11);
    const CanonicalAvatar b = optimize_avatar(start, m, *d, prompt, cfg, 11);
    CHECK(same_avatar(a, b));
    CHECK_FALSE(same_avatar(a, start));
    CHECK_NOTHROW(check_bindings(a, m));
  }
  SUBCASE("invalid config") {
    cfg.t_min = 900;
    cfg.t_max = 100;
    auto d = mock_denoiser({MockMode::perfect});
    CHECK_THROWS_AS(optimize_avatar(start, m, *d, prompt, cfg, 1), InvalidArgument);
  }
}

TEST_CASE("color target run converges toward the target") {
  const BodyModel m = make_toy_humanoid();
  const CanonicalAvatar start = init_avatar(m, 500, 2);
  GuidanceConfig cfg;
  cfg.iterations = 200;
  cfg.lambda_depth = 0.0;
  cfg.resolution = 128;
  cfg.fixed_view = front_view();
  const Vec3 target(0.9, 0.15, 0.1);
  auto d = mock_denoiser({MockMode::color_target, 0.0, target});
  auto run = [&] {
    OptimizationTrace trace;
    optimize_avatar(start, m, *d, PromptTemplate{}, cfg, 4, &trace);
    REQUIRE(trace.mean_color.size() == 201);
    const Vec3 initial = (trace.mean_color.front() - target).cwiseAbs();
    const Vec3 final = (trace.mean_color.back() - target).cwiseAbs();
    for (int c = 0; c < 3; ++c) CHECK(final[c] < 0.1 * initial[c]);
    return trace;
  };
  SUBCASE("color only: monotone") {
    cfg.trainable = {false, false, false, false, true};
    const OptimizationTrace trace = run();
    for (std::size_t i = 1; i < trace.mean_color.size(); ++i)
      CHECK((trace.mean_color[i] - target).norm() <= (trace.mean_color[i - 1] - target).norm() + 1e-12);
  }
  SUBCASE("all groups") { run(); }
}

TEST_CASE("npy encoding round-trips") {
  const Image img = random_image(5, 3, 2, 7);
  const std::string bytes = encode_npy(img);
  CHECK(bytes.size() % 8 == 0);
  std::size_t pos = 0;
  const Image back = decode_npy([&](char* dst, std::size_t len) {
    REQUIRE(pos + len <= bytes.size());
    std::memcpy(dst, bytes.data() + pos, len);
    pos += len;
  });
  CHECK(pos == bytes.size());
  REQUIRE(back.same_shape(img));
  CHECK((back.data == img.data).all());
}

#ifdef SYNTHPOSE_ECHO_DENOISER
TEST_CASE("external denoiser over pipes") {
  const Inputs in = gray_inputs(12, 8);
  GuidanceConfig cfg;
  SUBCASE("echoed noise acts as the perfect denoiser") {
    ExternalDenoiser d({SYNTHPOSE_PYTHON, SYNTHPOSE_ECHO_DENOISER});
    for (int rep = 0; rep < 3; ++rep) {
      const SdsGradients g = run_sds(d, in, cfg);
      CHECK((g.grad_rgb.data == 0.0).all());
      CHECK((g.grad_depth.data == 0.0).all());
    }
  }
  SUBCASE("biased child matches the in-process mock") {
    ExternalDenoiser ext({SYNTHPOSE_PYTHON, SYNTHPOSE_ECHO_DENOISER, "0.25"});
    auto mock = mock_denoiser({MockMode::constant_bias, 0.25});
    CHECK((run_sds(ext, in, cfg).grad_rgb.data == run_sds(*mock, in, cfg).grad_rgb.data).all());
  }
  SUBCASE("a child that exits reports an IoError") {
    ExternalDenoiser d({"/bin/true"});
    CHECK_THROWS_AS(run_sds(d, in, cfg), IoError);
  }
}
#endif
