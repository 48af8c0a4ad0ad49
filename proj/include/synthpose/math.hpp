// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "synthpose/common.hpp"

#include <cmath>

namespace synthpose {

template <typename Scalar>
Mat3T<Scalar> skew(const Vec3T<Scalar>& v) {
  Mat3T<Scalar> m;
  m << Scalar(0), -v.z(), v.y(), v.z(), Scalar(0), -v.x(), -v.y(), v.x(), Scalar(0);
  return m;
}

/// Exponential map so(3) -> SO(3). Below 1e-7 rad the Taylor series is used.
template <typename Scalar>
Mat3T<Scalar> axis_angle_to_matrix(const Vec3T<Scalar>& aa) {
  using std::cos;
  using std::sin;
  const Scalar theta2 = aa.squaredNorm();
  const Scalar theta = std::sqrt(theta2);
  const Mat3T<Scalar> K = skew(aa);
  Scalar a, b;
  if (theta < Scalar(1e-7)) {
    a = Scalar(1) - theta2 / Scalar(6);
    b = Scalar(0.5) - theta2 / Scalar(24);
  } else {
    a = sin(theta) / theta;
    b = (Scalar(1) - cos(theta)) / theta2;
  }
  return Mat3T<Scalar>::Identity() + a * K + b * K * K;
}

/// Quaternions are stored as (w, x, y, z).
template <typename Scalar>
Mat3T<Scalar> quat_to_matrix(const Vec4T<Scalar>& q) {
  const Scalar w = q[0], x = q[1], y = q[2], z = q[3];
  Mat3T<Scalar> r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

template <typename Scalar>
Vec4T<Scalar> matrix_to_quat(const Mat3T<Scalar>& m) {
  Eigen::Quaternion<Scalar> q(m);
  q.normalize();
  Vec4T<Scalar> out(q.w(), q.x(), q.y(), q.z());
  if (out[0] < Scalar(0)) out = -out;
  return out;
}

/// Hamilton product a ⊗ b (apply b first, then a).
template <typename Scalar>
Vec4T<Scalar> quat_multiply(const Vec4T<Scalar>& a, const Vec4T<Scalar>& b) {
  return Vec4T<Scalar>(a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
                       a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
                       a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
                       a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0]);
}

/// Gradient of L w.r.t. the quaternion components given dL/dR.
template <typename Scalar>
Vec4T<Scalar> quat_to_matrix_backward(const Vec4T<Scalar>& q, const Mat3T<Scalar>& g) {
  const Scalar w = q[0], x = q[1], y = q[2], z = q[3];
  Vec4T<Scalar> d;
  d[0] = 2 * (-z * g(0, 1) + y * g(0, 2) + z * g(1, 0) - x * g(1, 2) - y * g(2, 0) + x * g(2, 1));
  d[1] = 2 * (y * g(0, 1) + z * g(0, 2) + y * g(1, 0) - 2 * x * g(1, 1) - w * g(1, 2) +
              z * g(2, 0) + w * g(2, 1) - 2 * x * g(2, 2));
  d[2] = 2 * (-2 * y * g(0, 0) + x * g(0, 1) + w * g(0, 2) + x * g(1, 0) + z * g(1, 2) -
              w * g(2, 0) + z * g(2, 1) - 2 * y * g(2, 2));
  d[3] = 2 * (-2 * z * g(0, 0) - w * g(0, 1) + x * g(0, 2) + w * g(1, 0) - 2 * z * g(1, 1) +
              y * g(1, 2) + x * g(2, 0) + y * g(2, 1));
  return d;
}

/// Inverse of a symmetric 2x2 matrix with eigenvalues clamped from below.
template <typename Scalar>
Mat2T<Scalar> clamped_inverse(const Mat2T<Scalar>& a, Scalar min_eigenvalue) {
  const Scalar det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
  const Scalar half_trace = Scalar(0.5) * (a(0, 0) + a(1, 1));
  const Scalar disc = std::sqrt(std::max(Scalar(0), half_trace * half_trace - det));
  const Scalar lmin = half_trace - disc;
  if (lmin >= min_eigenvalue) {
    Mat2T<Scalar> inv;
    inv << a(1, 1), -a(0, 1), -a(1, 0), a(0, 0);
    return inv / det;
  }
  Eigen::SelfAdjointEigenSolver<Mat2T<Scalar>> es(a);
  Vec2T<Scalar> ev = es.eigenvalues().cwiseMax(min_eigenvalue);
  return es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
}

/// Rotation whose rows are the camera axes (right, down, forward) looking
/// from `eye` towards `target`.
template <typename Scalar>
Mat3T<Scalar> look_at_rotation(const Vec3T<Scalar>& eye, const Vec3T<Scalar>& target,
                               const Vec3T<Scalar>& world_up) {
  const Vec3T<Scalar> forward = (target - eye).normalized();
  Vec3T<Scalar> right = forward.cross(world_up);
  if (right.norm() < Scalar(1e-9)) {
    // forward is parallel to up; pick any perpendicular reference.
    right = forward.cross(Vec3T<Scalar>::UnitZ());
  }
  right.normalize();
  const Vec3T<Scalar> down = forward.cross(right);
  Mat3T<Scalar> r;
  r.row(0) = right.transpose();
  r.row(1) = down.transpose();
  r.row(2) = forward.transpose();
  return r;
}

inline bool is_orthonormal(const Mat3& m, double tol) {
  return ((m.transpose() * m) - Mat3::Identity()).cwiseAbs().maxCoeff() < tol;
}

}  // namespace synthpose
