// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "synthpose/body_model.hpp"
#include "synthpose/prompts.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace synthpose {

/// One splat. Rotation is a unit quaternion (w, x, y, z); color holds the
/// degree-0 SH coefficients used directly as linear RGB.
struct Gaussian {
  Vec3 position = Vec3::Zero();
  Vec4 rotation = Vec4(1, 0, 0, 0);
  Vec3 log_scale = Vec3::Zero();
  double opacity_logit = 0.0;
  Vec3 color = Vec3::Constant(0.5);

  [[nodiscard]] double opacity() const { return sigmoid(opacity_logit); }
  [[nodiscard]] Vec3 scale() const { return log_scale.array().exp(); }
};

struct SurfaceBinding {
  int face = 0;
  Vec3 barycentric = Vec3(1.0 / 3, 1.0 / 3, 1.0 / 3);
  double normal_offset = 0.0;
};

struct CanonicalAvatar {
  std::vector<Gaussian> gaussians;
  std::vector<SurfaceBinding> bindings;
  PromptTemplate prompt;
  std::string body_model_id;

  [[nodiscard]] std::size_t size() const { return gaussians.size(); }
};

/// Opacity logit whose sigmoid rounds to exactly 1.0 in double precision.
inline constexpr double kOpaqueLogit = 40.0;

/// Position of a binding on a mesh given as vertex rows.
Vec3 binding_position(const Points& vertices, const Faces& faces, const SurfaceBinding& b);

/// Binding of the closest point on `face` to `point`, with the signed
/// distance along the face normal kept as normal_offset.
SurfaceBinding bind_to_face(const Points& vertices, const Faces& faces, int face, const Vec3& point);

void check_bindings(const CanonicalAvatar& avatar, const BodyModel& model, double tol = 1e-5);

/// Area-uniform surface sampling of n Gaussians on the canonical template.
CanonicalAvatar init_avatar(const BodyModel& model, int n, std::uint64_t seed);

struct DensifyConfig {
  int start_iter = 300;
  int end_iter = 800;
  int interval = 100;
  double grad_threshold = 2e-4;
  double opacity_threshold = 0.005;
  /// Split vs clone boundary as a fraction of the body bounding-box diagonal.
  double split_scale_fraction = 0.01;
  double split_factor = 1.6;
};

/// Clone/split high-gradient Gaussians and drop transparent ones on the
/// configured schedule; returns the input unchanged off-schedule.
CanonicalAvatar densify_and_prune(const CanonicalAvatar& avatar, const BodyModel& model,
                                  const std::vector<double>& screen_grads, int iter,
                                  const DensifyConfig& cfg = {});

void save_avatar(const CanonicalAvatar& avatar, const std::filesystem::path& path);
CanonicalAvatar load_avatar(const std::filesystem::path& path);

}  // namespace synthpose
