// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "synthpose/common.hpp"

#include <cstdint>
#include <optional>
#include <utility>

namespace synthpose {

/// Pinhole camera. World-to-camera is q = rotation * p + translation; the
/// camera looks down +z, x points right and y points down in the image.
/// Pixel (i, j) has its center at (u, v) = (i, j).
struct Camera {
  double fx = 1, fy = 1, cx = 0, cy = 0;
  int width = 1, height = 1;
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  double near = 0.01, far = 100.0;

  void validate() const;
  [[nodiscard]] Vec3 position() const { return -rotation.transpose() * translation; }
  [[nodiscard]] Vec3 forward() const { return rotation.row(2).transpose(); }
  [[nodiscard]] Vec3 to_camera(const Vec3& p) const { return rotation * p + translation; }
};

/// Intrinsic block with a horizontal field of view and the principal point
/// at the image center.
Camera intrinsics_from_fov(double horizontal_fov_deg, int width, int height, double near = 0.05,
                           double far = 100.0);

struct BehindCamera : Error {
  using Error::Error;
};

struct Projection {
  double u = 0, v = 0, z = 0;
};

/// Pinhole projection; throws BehindCamera when the point is not in front
/// of the near plane.
Projection project(const Camera& cam, const Vec3& p);
std::optional<Projection> try_project(const Camera& cam, const Vec3& p);

/// Orbit sampling. The camera sits at
///   target + r * (cos(el) sin(az), sin(el), cos(el) cos(az))
/// (world +y up) looking at target, so az = el = 0 places it on +z.
struct CameraSamplerConfig {
  std::pair<double, double> azimuth_deg{0.0, 360.0};
  std::pair<double, double> elevation_deg{0.0, 20.0};
  std::pair<double, double> radius{3.0, 4.0};
  Vec3 target = Vec3(0, 0.9, 0);
  Camera intrinsics = intrinsics_from_fov(60.0, 1024, 1024);

  void validate() const;
};

struct CameraSample {
  Camera camera;
  double azimuth_deg = 0, elevation_deg = 0, radius = 0;
};

Camera look_at_camera(const Camera& intrinsics, const Vec3& eye, const Vec3& target);
Camera orbit_camera(const Camera& intrinsics, const Vec3& target, double azimuth_deg,
                    double elevation_deg, double radius);

CameraSample sample_camera(std::uint64_t seed, const CameraSamplerConfig& cfg);

}  // namespace synthpose
