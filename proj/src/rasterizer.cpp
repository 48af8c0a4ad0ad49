// SPDX-License-Identifier: Apache-2.0
#include "synthpose/rasterizer.hpp"

#include "synthpose/math.hpp"
#include "synthpose/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace synthpose {

namespace {

using Mat23 = Eigen::Matrix<double, 2, 3>;

// Everything the backward pass needs to re-derive a footprint.
struct Prepared {
  ProjectedGaussian screen;
  Mat23 jacobian = Mat23::Zero();
  Mat3 cam_cov = Mat3::Zero();
  Vec3 cam_point = Vec3::Zero();
  Mat3 rot = Mat3::Identity();
  Vec3 scale = Vec3::Ones();
  Vec4 unit_quat = Vec4(1, 0, 0, 0);
  double quat_norm = 1.0;
};

Prepared prepare(const Gaussian& g, const Camera& cam, const RasterConfig& cfg) {
  Prepared p;
  p.cam_point = cam.to_camera(g.position);
  const double z = p.cam_point.z();
  if (!(z > cam.near) || !(z <= cam.far)) return p;

  p.quat_norm = g.rotation.norm();
  p.unit_quat = g.rotation / p.quat_norm;
  p.rot = quat_to_matrix<double>(p.unit_quat);
  p.scale = g.log_scale.array().exp();
  const Mat3 l = p.rot * p.scale.asDiagonal();
  p.cam_cov = cam.rotation * (l * l.transpose()) * cam.rotation.transpose();

  const double x = p.cam_point.x(), y = p.cam_point.y();
  p.jacobian << cam.fx / z, 0.0, -cam.fx * x / (z * z), 0.0, cam.fy / z, -cam.fy * y / (z * z);

  ProjectedGaussian& s = p.screen;
  s.cov = p.jacobian * p.cam_cov * p.jacobian.transpose();
  s.cov(0, 1) = s.cov(1, 0) = 0.5 * (s.cov(0, 1) + s.cov(1, 0));
  s.cov.diagonal().array() += cfg.covariance_floor;
  s.conic = clamped_inverse<double>(s.cov, cfg.min_eigenvalue);
  s.mean = Vec2(cam.fx * x / z + cam.cx, cam.fy * y / z + cam.cy);
  s.depth = z;
  s.opacity = g.opacity();
  s.color = g.color;
  if (cfg.truncate) {
    const double half_trace = 0.5 * (s.cov(0, 0) + s.cov(1, 1));
    const double det = s.cov.determinant();
    const double lmax = half_trace + std::sqrt(std::max(0.0, half_trace * half_trace - det));
    s.radius = cfg.truncation_sigma * std::sqrt(std::max(lmax, cfg.min_eigenvalue));
  } else {
    s.radius = std::numeric_limits<double>::infinity();
  }
  s.visible = s.mean.allFinite() && s.conic.allFinite();
  return p;
}

struct Contribution {
  int slot;       // index into the tile's Gaussian list
  double alpha;
  double weight;  // exp(-0.5 d^T Q d)
  double transmittance;
  Vec2 offset;    // pixel - mean
};

struct PixelValue {
  Vec3 color = Vec3::Zero();
  double alpha = 0.0;
  double depth = 0.0;
};

// Front-to-back compositing of one pixel over an ordered Gaussian list.
template <bool kRecord>
PixelValue composite_pixel(double px, double py, const std::vector<int>& list,
                           const std::vector<Prepared>& prep, const RasterConfig& cfg,
                           std::vector<Contribution>* record) {
  PixelValue out;
  double t = 1.0;
  const double cutoff = cfg.truncation_sigma * cfg.truncation_sigma;
  for (std::size_t slot = 0; slot < list.size(); ++slot) {
    const ProjectedGaussian& s = prep[static_cast<std::size_t>(list[slot])].screen;
    const Vec2 d(px - s.mean.x(), py - s.mean.y());
    const double maha = d.dot(s.conic * d);
    if (cfg.truncate && maha > cutoff) continue;
    const double w = std::exp(-0.5 * maha);
    const double a = s.opacity * w;
    if (a <= 0.0) continue;
    const double ta = t * a;
    out.color += ta * s.color;
    out.alpha += ta;
    out.depth += ta * s.depth;
    if constexpr (kRecord) record->push_back({static_cast<int>(slot), a, w, t, d});
    t *= (1.0 - a);
    if (cfg.early_exit && t < cfg.min_transmittance) break;
  }
  return out;
}

struct SortedScene {
  std::vector<Prepared> prep;
  std::vector<int> order;  // visible Gaussians, front to back
};

SortedScene prepare_scene(std::span<const Gaussian> gaussians, const Camera& cam,
                          const RasterConfig& cfg) {
  cam.validate();
  SortedScene scene;
  scene.prep.resize(gaussians.size());
  for (std::size_t i = 0; i < gaussians.size(); ++i) {
    scene.prep[i] = prepare(gaussians[i], cam, cfg);
    if (scene.prep[i].screen.visible) scene.order.push_back(static_cast<int>(i));
  }
  std::stable_sort(scene.order.begin(), scene.order.end(), [&](int a, int b) {
    return scene.prep[static_cast<std::size_t>(a)].screen.depth <
           scene.prep[static_cast<std::size_t>(b)].screen.depth;
  });
  return scene;
}

struct Tile {
  int x0, y0, x1, y1;  // pixel range [x0, x1) x [y0, y1)
  std::vector<int> gaussians;
};

std::vector<Tile> bin_tiles(const SortedScene& scene, const Camera& cam, const RasterConfig& cfg,
                            bool single_tile) {
  std::vector<Tile> tiles;
  if (single_tile) {
    tiles.push_back({0, 0, cam.width, cam.height, scene.order});
    return tiles;
  }
  const int ts = std::max(1, cfg.tile_size);
  const int tx = (cam.width + ts - 1) / ts;
  const int ty = (cam.height + ts - 1) / ts;
  tiles.reserve(static_cast<std::size_t>(tx) * ty);
  for (int j = 0; j < ty; ++j)
    for (int i = 0; i < tx; ++i)
      tiles.push_back({i * ts, j * ts, std::min(cam.width, (i + 1) * ts),
                       std::min(cam.height, (j + 1) * ts), {}});
  for (int id : scene.order) {
    const ProjectedGaussian& s = scene.prep[static_cast<std::size_t>(id)].screen;
    int px0 = 0, px1 = cam.width - 1, py0 = 0, py1 = cam.height - 1;
    if (std::isfinite(s.radius)) {
      const double lo_x = std::floor(s.mean.x() - s.radius), hi_x = std::ceil(s.mean.x() + s.radius);
      const double lo_y = std::floor(s.mean.y() - s.radius), hi_y = std::ceil(s.mean.y() + s.radius);
      if (hi_x < 0 || hi_y < 0 || lo_x > cam.width - 1 || lo_y > cam.height - 1) continue;
      px0 = static_cast<int>(std::max(0.0, lo_x));
      px1 = static_cast<int>(std::min<double>(cam.width - 1, hi_x));
      py0 = static_cast<int>(std::max(0.0, lo_y));
      py1 = static_cast<int>(std::min<double>(cam.height - 1, hi_y));
    }
    for (int j = py0 / ts; j <= py1 / ts; ++j)
      for (int i = px0 / ts; i <= px1 / ts; ++i)
        tiles[static_cast<std::size_t>(j) * tx + i].gaussians.push_back(id);
  }
  return tiles;
}

RenderOutput render_tiles(std::span<const Gaussian> gaussians, const Camera& cam,
                          const RasterConfig& cfg, bool single_tile) {
  const SortedScene scene = prepare_scene(gaussians, cam, cfg);
  const std::vector<Tile> tiles = bin_tiles(scene, cam, cfg, single_tile);
  RenderOutput out;
  out.rgb = Image(cam.width, cam.height, 3);
  out.alpha = Image(cam.width, cam.height, 1);
  out.depth = Image(cam.width, cam.height, 1);
  out.screen_stats.assign(gaussians.size(), 0.0);
  parallel_for(tiles.size(), cfg.threads, [&](std::size_t ti) {
    const Tile& tile = tiles[ti];
    for (int y = tile.y0; y < tile.y1; ++y) {
      for (int x = tile.x0; x < tile.x1; ++x) {
        const PixelValue v = composite_pixel<false>(x, y, tile.gaussians, scene.prep, cfg, nullptr);
        for (int c = 0; c < 3; ++c) out.rgb(x, y, c) = v.color[c];
        out.alpha(x, y) = v.alpha;
        out.depth(x, y) = v.depth;
      }
    }
  });
  return out;
}

struct ScreenGrad {
  Vec2 mean = Vec2::Zero();
  Mat2 conic = Mat2::Zero();
  double opacity = 0.0;
  Vec3 color = Vec3::Zero();
  double depth = 0.0;

  ScreenGrad& operator+=(const ScreenGrad& o) {
    mean += o.mean;
    conic += o.conic;
    opacity += o.opacity;
    color += o.color;
    depth += o.depth;
    return *this;
  }
};

double pixel_or_zero(const Image& img, int x, int y, int c) {
  return img.empty() ? 0.0 : img(x, y, c);
}

GaussianGradient chain_to_parameters(const Gaussian& g, const Prepared& p, const ScreenGrad& sg,
                                     const Camera& cam) {
  GaussianGradient out;
  out.color = sg.color;
  const double o = p.screen.opacity;
  out.opacity_logit = sg.opacity * o * (1.0 - o);
  out.screen_grad_norm = sg.mean.norm();

  // conic = cov^-1  =>  dL/dcov = -Q G Q
  const Mat2& q = p.screen.conic;
  const Mat2 g_cov = -q * sg.conic * q;
  // cov = J M J^T + floor
  const Mat23& jac = p.jacobian;
  const Mat3 g_cam_cov = jac.transpose() * g_cov * jac;
  const Mat23 g_jac = 2.0 * g_cov * jac * p.cam_cov;

  const double x = p.cam_point.x(), y = p.cam_point.y(), z = p.cam_point.z();
  const double z2 = z * z, z3 = z2 * z;
  Vec3 g_point = jac.transpose() * sg.mean;  // d(mean)/d(point) == J
  g_point.x() += g_jac(0, 2) * (-cam.fx / z2);
  g_point.y() += g_jac(1, 2) * (-cam.fy / z2);
  g_point.z() += g_jac(0, 0) * (-cam.fx / z2) + g_jac(0, 2) * (2.0 * cam.fx * x / z3) +
                 g_jac(1, 1) * (-cam.fy / z2) + g_jac(1, 2) * (2.0 * cam.fy * y / z3);
  g_point.z() += sg.depth;
  out.position = cam.rotation.transpose() * g_point;

  // Sigma = W^T M W,  Sigma = L L^T with L = R S
  const Mat3 g_sigma = cam.rotation.transpose() * g_cam_cov * cam.rotation;
  const Mat3 l = p.rot * p.scale.asDiagonal();
  const Mat3 g_l = (g_sigma + g_sigma.transpose()) * l;
  const Mat3 g_s = p.rot.transpose() * g_l;
  for (int k = 0; k < 3; ++k) out.log_scale[k] = g_s(k, k) * p.scale[k];
  const Mat3 g_rot = g_l * p.scale.asDiagonal();
  const Vec4 g_unit = quat_to_matrix_backward<double>(p.unit_quat, g_rot);
  out.rotation = (g_unit - p.unit_quat * p.unit_quat.dot(g_unit)) / p.quat_norm;
  (void)g;
  return out;
}

}  // namespace

ProjectedGaussian project_gaussian(const Gaussian& g, const Camera& cam, const RasterConfig& cfg) {
  return prepare(g, cam, cfg).screen;
}

RenderOutput rasterize(std::span<const Gaussian> gaussians, const Camera& cam,
                       const RasterConfig& cfg) {
  return render_tiles(gaussians, cam, cfg, false);
}

RenderOutput rasterize(const DeformedCloud& cloud, const Camera& cam, const RasterConfig& cfg) {
  return rasterize(std::span<const Gaussian>(cloud.gaussians), cam, cfg);
}

RenderOutput rasterize_reference(std::span<const Gaussian> gaussians, const Camera& cam,
                                 const RasterConfig& cfg) {
  RasterConfig serial = cfg;
  serial.threads = 1;
  return render_tiles(gaussians, cam, serial, true);
}

std::vector<GaussianGradient> rasterize_backward(std::span<const Gaussian> gaussians,
                                                 const Camera& cam, const Image& grad_rgb,
                                                 const Image& grad_depth, const Image& grad_alpha,
                                                 const RasterConfig& cfg) {
  auto check = [&](const Image& img, int channels, const char* name) {
    if (img.empty()) return;
    if (img.width != cam.width || img.height != cam.height || img.channels != channels)
      throw DimensionError(std::string("rasterize_backward: ") + name +
                           " does not match the render resolution");
  };
  check(grad_rgb, 3, "grad_rgb");
  check(grad_depth, 1, "grad_depth");
  check(grad_alpha, 1, "grad_alpha");

  const SortedScene scene = prepare_scene(gaussians, cam, cfg);
  const std::vector<Tile> tiles = bin_tiles(scene, cam, cfg, false);

  // Per-tile partial sums, reduced below in tile order so the result does
  // not depend on the worker count.
  std::vector<std::vector<ScreenGrad>> partial(tiles.size());
  parallel_for(tiles.size(), cfg.threads, [&](std::size_t ti) {
    const Tile& tile = tiles[ti];
    std::vector<ScreenGrad>& acc = partial[ti];
    acc.assign(tile.gaussians.size(), ScreenGrad{});
    std::vector<Contribution> contrib;
    for (int y = tile.y0; y < tile.y1; ++y) {
      for (int x = tile.x0; x < tile.x1; ++x) {
        const Vec3 g_color(pixel_or_zero(grad_rgb, x, y, 0), pixel_or_zero(grad_rgb, x, y, 1),
                           pixel_or_zero(grad_rgb, x, y, 2));
        const double g_depth = pixel_or_zero(grad_depth, x, y, 0);
        const double g_alpha = pixel_or_zero(grad_alpha, x, y, 0);
        if (g_color.isZero() && g_depth == 0.0 && g_alpha == 0.0) continue;
        contrib.clear();
        composite_pixel<true>(x, y, tile.gaussians, scene.prep, cfg, &contrib);
        double suffix = 0.0;  // sum_{j>i} prod_{i<k<j}(1-a_k) a_j X_j
        for (auto it = contrib.rbegin(); it != contrib.rend(); ++it) {
          const ProjectedGaussian& s =
              scene.prep[static_cast<std::size_t>(tile.gaussians[static_cast<std::size_t>(it->slot)])]
                  .screen;
          ScreenGrad& g = acc[static_cast<std::size_t>(it->slot)];
          const double ta = it->transmittance * it->alpha;
          const double value = s.color.dot(g_color) + s.depth * g_depth + g_alpha;
          g.color += ta * g_color;
          g.depth += ta * g_depth;
          const double g_a = it->transmittance * (value - suffix);
          suffix = it->alpha * value + (1.0 - it->alpha) * suffix;
          // alpha = o * exp(-0.5 d^T Q d)
          g.opacity += g_a * it->weight;
          const double g_power = g_a * it->alpha;  // dL/d(-0.5 d^T Q d)
          g.mean += g_power * (s.conic * it->offset);
          g.conic += (-0.5 * g_power) * (it->offset * it->offset.transpose());
        }
      }
    }
  });

  std::vector<ScreenGrad> total(gaussians.size());
  for (std::size_t ti = 0; ti < tiles.size(); ++ti) {
    const auto& list = tiles[ti].gaussians;
    for (std::size_t s = 0; s < list.size(); ++s)
      total[static_cast<std::size_t>(list[s])] += partial[ti][s];
  }

  std::vector<GaussianGradient> out(gaussians.size());
  for (int id : scene.order) {
    const auto i = static_cast<std::size_t>(id);
    out[i] = chain_to_parameters(gaussians[i], scene.prep[i], total[i], cam);
  }
  for (const auto& g : out) {
    if (!g.position.allFinite() || !g.rotation.allFinite() || !g.log_scale.allFinite() ||
        !std::isfinite(g.opacity_logit) || !g.color.allFinite())
      throw NumericError("rasterize_backward: non-finite gradient");
  }
  return out;
}

void accumulate_screen_stats(RenderOutput& render, const std::vector<GaussianGradient>& grads) {
  if (render.screen_stats.size() != grads.size())
    throw DimensionError("accumulate_screen_stats: size mismatch");
  for (std::size_t i = 0; i < grads.size(); ++i) render.screen_stats[i] += grads[i].screen_grad_norm;
}

MaskBox mask_and_bbox(const Image& alpha, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0))
    throw InvalidArgument("mask_and_bbox: threshold must be in (0, 1)");
  MaskBox out;
  out.width = alpha.width;
  out.height = alpha.height;
  out.mask.assign(static_cast<std::size_t>(alpha.pixel_count()), 0);
  int x0 = alpha.width, y0 = alpha.height, x1 = -1, y1 = -1;
  for (int y = 0; y < alpha.height; ++y) {
    for (int x = 0; x < alpha.width; ++x) {
      if (alpha(x, y) >= threshold) {
        out.mask[static_cast<std::size_t>(y) * alpha.width + x] = 1;
        x0 = std::min(x0, x);
        y0 = std::min(y0, y);
        x1 = std::max(x1, x);
        y1 = std::max(y1, y);
      }
    }
  }
  if (x1 >= 0) {
    out.empty = false;
    out.x = x0;
    out.y = y0;
    out.w = x1 - x0 + 1;
    out.h = y1 - y0 + 1;
  }
  return out;
}

}  // namespace synthpose
