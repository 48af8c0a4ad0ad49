// SPDX-License-Identifier: Apache-2.0
// Shared fixtures and independent oracles for the test suites.
#pragma once

#include "synthpose/rasterizer.hpp"

#include <array>
#include <cmath>
#include <random>
#include <vector>

namespace synthpose::testing {

inline Camera small_camera(int size = 32, double focal = 32.0) {
  Camera cam;
  cam.width = cam.height = size;
  cam.fx = cam.fy = focal;
  cam.cx = cam.cy = 0.5 * (size - 1);
  cam.near = 0.1;
  cam.far = 50.0;
  return cam;
}

/// Random Gaussians in front of an identity camera at the origin.
inline std::vector<Gaussian> random_cloud(int n, std::uint64_t seed, double spread = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Gaussian> out;
  for (int i = 0; i < n; ++i) {
    Gaussian g;
    g.position = Vec3(spread * 0.9 * u(rng), spread * 0.9 * u(rng), 3.5 + 0.8 * u(rng));
    g.rotation = Vec4(normal(rng), normal(rng), normal(rng), normal(rng)).normalized();
    g.log_scale = Vec3(std::log(0.12 + 0.06 * u(rng)), std::log(0.12 + 0.06 * u(rng)),
                       std::log(0.12 + 0.06 * u(rng)));
    g.opacity_logit = 0.3 * u(rng);
    g.color = Vec3(0.5 + 0.4 * u(rng), 0.5 + 0.4 * u(rng), 0.5 + 0.4 * u(rng));
    out.push_back(g);
  }
  return out;
}

inline Image random_image(int w, int h, int c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Image img(w, h, c);
  for (Eigen::Index i = 0; i < img.data.size(); ++i) img.data[i] = u(rng);
  return img;
}

/// Scalar loss sum(gR * rgb) + sum(gD * depth) + sum(gA * alpha).
inline double linear_loss(const RenderOutput& r, const Image& g_rgb, const Image& g_depth,
                          const Image& g_alpha) {
  double l = 0.0;
  if (!g_rgb.empty()) l += (r.rgb.data * g_rgb.data).sum();
  if (!g_depth.empty()) l += (r.depth.data * g_depth.data).sum();
  if (!g_alpha.empty()) l += (r.alpha.data * g_alpha.data).sum();
  return l;
}

/// Parameter groups in a fixed order: position, rotation, log_scale,
/// opacity_logit, color.
inline constexpr std::array<const char*, 5> kGroupNames = {"position", "rotation", "log_scale",
                                                           "opacity", "color"};

inline double* param_ptr(Gaussian& g, int group, int k) {
  switch (group) {
    case 0: return &g.position[k];
    case 1: return &g.rotation[k];
    case 2: return &g.log_scale[k];
    case 3: return &g.opacity_logit;
    default: return &g.color[k];
  }
}
inline double grad_of(const GaussianGradient& g, int group, int k) {
  switch (group) {
    case 0: return g.position[k];
    case 1: return g.rotation[k];
    case 2: return g.log_scale[k];
    case 3: return g.opacity_logit;
    default: return g.color[k];
  }
}
inline int group_size(int group) { return group == 1 ? 4 : group == 3 ? 1 : 3; }

/// Relative error per group between analytic gradients and central finite
/// differences of an arbitrary scalar function of the cloud.
template <typename LossFn>
std::array<double, 5> finite_difference_errors(std::vector<Gaussian> cloud,
                                               const std::vector<GaussianGradient>& analytic,
                                               LossFn&& loss, double h = 1e-6) {
  std::array<double, 5> num{}, den{};
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (int group = 0; group < 5; ++group) {
      for (int k = 0; k < group_size(group); ++k) {
        double* p = param_ptr(cloud[i], group, k);
        const double saved = *p;
        *p = saved + h;
        const double lp = loss(cloud);
        *p = saved - h;
        const double lm = loss(cloud);
        *p = saved;
        const double fd = (lp - lm) / (2.0 * h);
        const double an = grad_of(analytic[i], group, k);
        num[group] += (fd - an) * (fd - an);
        den[group] += fd * fd;
      }
    }
  }
  std::array<double, 5> rel{};
  for (int g = 0; g < 5; ++g) rel[g] = std::sqrt(num[g]) / std::max(std::sqrt(den[g]), 1e-300);
  return rel;
}

}  // namespace synthpose::testing
