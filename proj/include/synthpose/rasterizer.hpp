// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "synthpose/animate.hpp"
#include "synthpose/camera.hpp"

#include <span>
#include <vector>

namespace synthpose {

struct RasterConfig {
  int tile_size = 16;
  /// Footprints are evaluated out to this many standard deviations
  /// (Mahalanobis radius); disabled when `truncate` is false.
  bool truncate = true;
  double truncation_sigma = 3.0;
  /// A pixel stops compositing once its transmittance drops below this.
  bool early_exit = true;
  double min_transmittance = 1e-4;
  /// Added to the diagonal of every screen covariance (px^2).
  double covariance_floor = 0.3;
  double min_eigenvalue = 1e-8;
  int threads = 1;
};

/// Premultiplied HDR color, coverage and alpha-weighted camera depth.
struct RenderOutput {
  Image rgb;    // H x W x 3
  Image alpha;  // H x W x 1
  Image depth;  // H x W x 1
  /// Per-Gaussian accumulated |dL/d mean2d|; zero after a forward pass and
  /// filled by accumulate_screen_stats().
  std::vector<double> screen_stats;
};

struct GaussianGradient {
  Vec3 position = Vec3::Zero();
  Vec4 rotation = Vec4::Zero();
  Vec3 log_scale = Vec3::Zero();
  double opacity_logit = 0.0;
  Vec3 color = Vec3::Zero();
  /// |dL/d(screen mean)| in pixels, for densification.
  double screen_grad_norm = 0.0;
};

/// Screen-space footprint of one Gaussian.
struct ProjectedGaussian {
  bool visible = false;
  Vec2 mean = Vec2::Zero();
  Mat2 cov = Mat2::Identity();    // includes the covariance floor
  Mat2 conic = Mat2::Identity();  // cov^-1
  double depth = 0.0;
  double opacity = 0.0;
  Vec3 color = Vec3::Zero();
  double radius = 0.0;  // bounding radius in pixels (infinite if untruncated)
};

ProjectedGaussian project_gaussian(const Gaussian& g, const Camera& cam, const RasterConfig& cfg);

/// Tile-binned front-to-back splatting.
RenderOutput rasterize(std::span<const Gaussian> gaussians, const Camera& cam,
                       const RasterConfig& cfg = {});
RenderOutput rasterize(const DeformedCloud& cloud, const Camera& cam, const RasterConfig& cfg = {});

/// Evaluates every Gaussian at every pixel with the same per-pixel rules as
/// rasterize(), without tiling or bounding-box culling.
RenderOutput rasterize_reference(std::span<const Gaussian> gaussians, const Camera& cam,
                                 const RasterConfig& cfg = {});

/// Exact adjoint of rasterize() for the output gradients dL/drgb, dL/ddepth
/// and dL/dalpha. Any of the gradient images may be empty (treated as zero).
std::vector<GaussianGradient> rasterize_backward(std::span<const Gaussian> gaussians,
                                                 const Camera& cam, const Image& grad_rgb,
                                                 const Image& grad_depth, const Image& grad_alpha,
                                                 const RasterConfig& cfg = {});

void accumulate_screen_stats(RenderOutput& render, const std::vector<GaussianGradient>& grads);

struct MaskBox {
  std::vector<std::uint8_t> mask;  // H x W, 1 where alpha >= threshold
  int width = 0, height = 0;
  bool empty = true;
  int x = 0, y = 0, w = 0, h = 0;
};

MaskBox mask_and_bbox(const Image& alpha, double threshold);

}  // namespace synthpose
