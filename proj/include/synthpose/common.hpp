// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace synthpose {

template <typename Scalar>
using Vec2T = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Vec3T = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Vec4T = Eigen::Matrix<Scalar, 4, 1>;
template <typename Scalar>
using Mat2T = Eigen::Matrix<Scalar, 2, 2>;
template <typename Scalar>
using Mat3T = Eigen::Matrix<Scalar, 3, 3>;

using Vec2 = Vec2T<double>;
using Vec3 = Vec3T<double>;
using Vec4 = Vec4T<double>;
using Mat2 = Mat2T<double>;
using Mat3 = Mat3T<double>;

/// N×3 row-major point/row matrices (vertices, joints, keypoints).
using Points = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using Faces = Eigen::Matrix<int, Eigen::Dynamic, 3, Eigen::RowMajor>;
using MatX = Eigen::MatrixXd;
using VecX = Eigen::VectorXd;

// Error hierarchy. The CLI maps these onto exit codes.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DimensionError : Error {
  using Error::Error;
};
struct InvalidArgument : Error {
  using Error::Error;
};
struct SchemaError : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};
struct NumericError : Error {
  using Error::Error;
};

/// Dense interleaved image (row-major, HWC). Pixel (x, y) has its center at
/// continuous coordinate (x, y).
template <typename Scalar>
struct ImageT {
  int width = 0;
  int height = 0;
  int channels = 0;
  Eigen::Array<Scalar, Eigen::Dynamic, 1> data;

  ImageT() = default;
  ImageT(int w, int h, int c, Scalar fill = Scalar(0))
      : width(w), height(h), channels(c),
        data(Eigen::Array<Scalar, Eigen::Dynamic, 1>::Constant(
            static_cast<Eigen::Index>(w) * h * c, fill)) {}

  Scalar& operator()(int x, int y, int c = 0) {
    return data[(static_cast<Eigen::Index>(y) * width + x) * channels + c];
  }
  Scalar operator()(int x, int y, int c = 0) const {
    return data[(static_cast<Eigen::Index>(y) * width + x) * channels + c];
  }

  [[nodiscard]] bool same_shape(const ImageT& o) const {
    return width == o.width && height == o.height && channels == o.channels;
  }
  [[nodiscard]] Eigen::Index pixel_count() const {
    return static_cast<Eigen::Index>(width) * height;
  }
  [[nodiscard]] bool empty() const { return data.size() == 0; }
};

using Image = ImageT<double>;

inline void require_same_shape(const Image& a, const Image& b, const char* what) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(what) + ": image shape mismatch (" +
                         std::to_string(a.width) + "x" + std::to_string(a.height) + "x" +
                         std::to_string(a.channels) + " vs " + std::to_string(b.width) + "x" +
                         std::to_string(b.height) + "x" + std::to_string(b.channels) + ")");
  }
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace synthpose
