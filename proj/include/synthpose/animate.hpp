// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "synthpose/avatar.hpp"
#include "synthpose/body_model.hpp"

#include <filesystem>
#include <limits>
#include <vector>

namespace synthpose {

/// World-space Gaussians of one frame. kept_indices maps each entry back to
/// the canonical avatar; face_normals holds the posed normal of the bound
/// face (used for shading).
struct DeformedCloud {
  std::vector<Gaussian> gaussians;
  std::vector<int> kept_indices;
  std::vector<Vec3> face_normals;
  int frame_index = 0;

  [[nodiscard]] std::size_t size() const { return gaussians.size(); }
};

/// Canonical avatar as a cloud (identity pose, all Gaussians kept).
DeformedCloud canonical_cloud(const CanonicalAvatar& avatar, const BodyModel& model);

/// Transports every Gaussian with its bound face.
DeformedCloud deform(const CanonicalAvatar& avatar, const BodyModel& model,
                     const PoseParams& params, int frame_index = 0);

/// Same as deform() for an already posed mesh.
DeformedCloud deform_with_mesh(const CanonicalAvatar& avatar, const BodyModel& model,
                               const PosedMesh& mesh, int frame_index = 0);

/// Canonical positions carried by LBS with the bound face's barycentrically
/// interpolated skinning weights.
std::vector<Vec3> lbs_expected_positions(const CanonicalAvatar& avatar, const BodyModel& model,
                                         const PoseParams& params);

/// Drops Gaussians whose position deviates from `expected` by more than tau.
DeformedCloud cull_deviants(const DeformedCloud& cloud, const std::vector<Vec3>& expected,
                            double tau);

/// Default culling threshold: 3x the mean edge length of the template.
double default_cull_tau(const BodyModel& model);

void save_cloud(const DeformedCloud& cloud, const std::filesystem::path& path);
DeformedCloud load_cloud(const std::filesystem::path& path);

}  // namespace synthpose
