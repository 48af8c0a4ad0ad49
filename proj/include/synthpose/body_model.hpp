// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "synthpose/common.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace synthpose {

inline constexpr int kRootParent = -1;

/// Articulated body: template mesh, skinning weights, kinematic tree, joint
/// regressor and linear shape space. Immutable once validated.
struct BodyModel {
  std::string id;
  Points template_vertices;   // M x 3
  Faces faces;                // F x 3
  Points rest_joints;         // K x 3
  MatX skinning_weights;      // M x K
  MatX joint_regressor;       // K x M
  std::vector<int> kinematic_parents;  // K, kRootParent for the root
  MatX shape_basis;           // 3M x B, row 3*v + axis

  [[nodiscard]] int vertex_count() const { return static_cast<int>(template_vertices.rows()); }
  [[nodiscard]] int face_count() const { return static_cast<int>(faces.rows()); }
  [[nodiscard]] int joint_count() const { return static_cast<int>(rest_joints.rows()); }
  [[nodiscard]] int shape_count() const { return static_cast<int>(shape_basis.cols()); }

  /// Throws SchemaError naming the first violated invariant.
  void validate() const;

  /// Joints in an order where every parent precedes its children.
  [[nodiscard]] std::vector<int> topological_order() const;

  /// Template with shape displacement applied.
  [[nodiscard]] Points shaped_vertices(const VecX& betas) const;
};

struct PoseParams {
  Points body_pose;   // K x 3 axis-angle
  Vec3 global_orient = Vec3::Zero();
  Vec3 translation = Vec3::Zero();
  VecX betas;         // B

  static PoseParams identity(int joints, int shapes);
};

struct MotionSequence {
  std::vector<PoseParams> frames;
  std::string action_label;
  std::string subject_id;
  std::string source_id;
};

struct PosedMesh {
  Points vertices;               // M x 3
  std::vector<Mat3> face_frames;  // canonical tangent frame -> posed tangent frame
};

/// Per-joint rigid transforms of a pose. Joint j maps a rest point x to
/// rotation[j] * x + translation[j] + global_translation; rotation already
/// includes the global orientation.
struct JointTransforms {
  std::vector<Mat3> rotation;
  std::vector<Vec3> translation;
  Mat3 global = Mat3::Identity();
  Vec3 global_translation = Vec3::Zero();

  /// Linear blend of the joint transforms with the given weights (length K).
  [[nodiscard]] Vec3 apply(const Eigen::Ref<const VecX>& weights, const Vec3& rest) const;
};

/// Orthonormal tangent frame of a triangle: columns are the first edge
/// direction, the in-plane perpendicular and the face normal.
Mat3 face_tangent_frame(const Vec3& a, const Vec3& b, const Vec3& c);
Vec3 face_normal(const Vec3& a, const Vec3& b, const Vec3& c);

void check_pose_dimensions(const BodyModel& model, const PoseParams& params);

JointTransforms skinning_transforms(const BodyModel& model, const PoseParams& params);

/// Linear blend skinning followed by global orientation and translation.
PosedMesh pose_mesh(const BodyModel& model, const PoseParams& params);

/// G · vertices.
Points regress_joints(const BodyModel& model, const Points& vertices);

/// Replaces every frame's betas by the mean over the sequence.
MotionSequence normalize_shape(const MotionSequence& seq);

// Motion and body-model files (JSON). Field names are listed in docs/schema.md.
MotionSequence load_motion(const std::filesystem::path& path);
void save_motion(const MotionSequence& seq, const std::filesystem::path& path);
BodyModel load_body_model(const std::filesystem::path& path);
void save_body_model(const BodyModel& model, const std::filesystem::path& path);

}  // namespace synthpose
