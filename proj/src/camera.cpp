// SPDX-License-Identifier: Apache-2.0
#include "synthpose/camera.hpp"

#include "synthpose/math.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace synthpose {

namespace {
constexpr double kDeg = std::numbers::pi / 180.0;
}

void Camera::validate() const {
  if (!(fx > 0 && fy > 0)) throw InvalidArgument("camera: focal lengths must be positive");
  if (width < 1 || height < 1) throw InvalidArgument("camera: image size must be positive");
  if (!(near > 0 && near < far)) throw InvalidArgument("camera: need 0 < near < far");
  if (!is_orthonormal(rotation, 1e-6)) throw InvalidArgument("camera: rotation is not orthonormal");
  if (!translation.allFinite()) throw InvalidArgument("camera: non-finite translation");
}

Camera intrinsics_from_fov(double horizontal_fov_deg, int width, int height, double near,
                           double far) {
  Camera c;
  c.width = width;
  c.height = height;
  c.fx = 0.5 * width / std::tan(0.5 * horizontal_fov_deg * kDeg);
  c.fy = c.fx;
  c.cx = 0.5 * (width - 1);
  c.cy = 0.5 * (height - 1);
  c.near = near;
  c.far = far;
  return c;
}

std::optional<Projection> try_project(const Camera& cam, const Vec3& p) {
  const Vec3 q = cam.to_camera(p);
  if (!(q.z() > cam.near)) return std::nullopt;
  return Projection{cam.fx * q.x() / q.z() + cam.cx, cam.fy * q.y() / q.z() + cam.cy, q.z()};
}

Projection project(const Camera& cam, const Vec3& p) {
  if (!p.allFinite()) throw InvalidArgument("project: non-finite point");
  auto r = try_project(cam, p);
  if (!r) throw BehindCamera("project: point is behind the camera near plane");
  return *r;
}

void CameraSamplerConfig::validate() const {
  if (azimuth_deg.first > azimuth_deg.second || elevation_deg.first > elevation_deg.second ||
      radius.first > radius.second)
    throw InvalidArgument("camera sampler: empty range");
  if (!(radius.first > 0)) throw InvalidArgument("camera sampler: radius must be positive");
  if (elevation_deg.first < -90 || elevation_deg.second > 90)
    throw InvalidArgument("camera sampler: elevation outside [-90, 90]");
  intrinsics.validate();
}

Camera look_at_camera(const Camera& intrinsics, const Vec3& eye, const Vec3& target) {
  Camera c = intrinsics;
  c.rotation = look_at_rotation<double>(eye, target, Vec3::UnitY());
  c.translation = -c.rotation * eye;
  return c;
}

Camera orbit_camera(const Camera& intrinsics, const Vec3& target, double azimuth_deg,
                    double elevation_deg, double radius) {
  const double az = azimuth_deg * kDeg;
  const double el = elevation_deg * kDeg;
  const Vec3 dir(std::cos(el) * std::sin(az), std::sin(el), std::cos(el) * std::cos(az));
  return look_at_camera(intrinsics, target + radius * dir, target);
}

CameraSample sample_camera(std::uint64_t seed, const CameraSamplerConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  auto draw = [&](const std::pair<double, double>& r) {
    if (r.first == r.second) return r.first;
    return std::uniform_real_distribution<double>(r.first, r.second)(rng);
  };
  CameraSample s;
  s.azimuth_deg = draw(cfg.azimuth_deg);
  s.elevation_deg = draw(cfg.elevation_deg);
  s.radius = draw(cfg.radius);
  s.camera = orbit_camera(cfg.intrinsics, cfg.target, s.azimuth_deg, s.elevation_deg, s.radius);
  return s;
}

}  // namespace synthpose
