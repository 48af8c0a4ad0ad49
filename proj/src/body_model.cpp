// SPDX-License-Identifier: Apache-2.0
#include "synthpose/body_model.hpp"

#include "synthpose/json_io.hpp"
#include "synthpose/math.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace synthpose {

namespace {

constexpr int kMotionFormatVersion = 1;
constexpr int kBodyFormatVersion = 1;

bool all_finite(const Eigen::Ref<const MatX>& m) { return m.allFinite(); }

}  // namespace

void BodyModel::validate() const {
  const int m = vertex_count();
  const int k = joint_count();
  if (m == 0) throw SchemaError("body model: no template vertices");
  if (k == 0) throw SchemaError("body model: no joints");
  if (skinning_weights.rows() != m || skinning_weights.cols() != k)
    throw SchemaError("body model: skinning_weights must be M x K");
  if (joint_regressor.rows() != k || joint_regressor.cols() != m)
    throw SchemaError("body model: joint_regressor must be K x M");
  if (static_cast<int>(kinematic_parents.size()) != k)
    throw SchemaError("body model: kinematic_parents must have K entries");
  if (shape_basis.rows() != 3 * m)
    throw SchemaError("body model: shape_basis must have 3M rows");
  if ((skinning_weights.array() < 0.0).any())
    throw SchemaError("body model: negative skinning weight");
  for (int v = 0; v < m; ++v) {
    if (std::abs(skinning_weights.row(v).sum() - 1.0) > 1e-6)
      throw SchemaError("body model: skinning weights of vertex " + std::to_string(v) +
                        " do not sum to 1");
  }
  for (int j = 0; j < k; ++j) {
    if (std::abs(joint_regressor.row(j).sum() - 1.0) > 1e-6)
      throw SchemaError("body model: joint_regressor row " + std::to_string(j) +
                        " does not sum to 1");
  }
  if (faces.size() > 0 && (faces.minCoeff() < 0 || faces.maxCoeff() >= m))
    throw SchemaError("body model: face index out of range");
  int roots = 0;
  for (int j = 0; j < k; ++j) {
    const int p = kinematic_parents[j];
    if (p == kRootParent) {
      ++roots;
    } else if (p < 0 || p >= k || p == j) {
      throw SchemaError("body model: invalid parent index for joint " + std::to_string(j));
    }
  }
  if (roots != 1) throw SchemaError("body model: kinematic tree must have exactly one root");
  // Acyclic: every joint reaches the root within K steps.
  for (int j = 0; j < k; ++j) {
    int cur = j;
    int steps = 0;
    while (cur != kRootParent) {
      cur = kinematic_parents[cur];
      if (++steps > k) throw SchemaError("body model: kinematic tree has a cycle");
    }
  }
  if (!template_vertices.allFinite() || !rest_joints.allFinite() || !all_finite(shape_basis))
    throw SchemaError("body model: non-finite geometry");
}

std::vector<int> BodyModel::topological_order() const {
  const int k = joint_count();
  std::vector<int> depth(k, 0);
  for (int j = 0; j < k; ++j) {
    for (int p = kinematic_parents[j]; p != kRootParent; p = kinematic_parents[p]) ++depth[j];
  }
  std::vector<int> order(k);
  for (int j = 0; j < k; ++j) order[j] = j;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return depth[a] < depth[b]; });
  return order;
}

Points BodyModel::shaped_vertices(const VecX& betas) const {
  Points out = template_vertices;
  if (betas.size() == 0 || shape_count() == 0) return out;
  const VecX disp = shape_basis * betas;
  for (int v = 0; v < vertex_count(); ++v) out.row(v) += disp.segment<3>(3 * v).transpose();
  return out;
}

PoseParams PoseParams::identity(int joints, int shapes) {
  PoseParams p;
  p.body_pose = Points::Zero(joints, 3);
  p.betas = VecX::Zero(shapes);
  return p;
}

Vec3 face_normal(const Vec3& a, const Vec3& b, const Vec3& c) {
  return (b - a).cross(c - a).normalized();
}

Mat3 face_tangent_frame(const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 e1 = (b - a).normalized();
  const Vec3 n = (b - a).cross(c - a).normalized();
  // Re-orthogonalize so round-off in n does not leak into the frame.
  const Vec3 t = n.cross(e1).normalized();
  const Vec3 n2 = e1.cross(t);
  Mat3 f;
  f.col(0) = e1;
  f.col(1) = t;
  f.col(2) = n2;
  return f;
}

void check_pose_dimensions(const BodyModel& model, const PoseParams& params) {
  if (params.body_pose.rows() != model.joint_count())
    throw DimensionError("pose has " + std::to_string(params.body_pose.rows()) +
                         " joints, model has " + std::to_string(model.joint_count()));
  if (params.betas.size() != model.shape_count())
    throw DimensionError("pose has " + std::to_string(params.betas.size()) +
                         " shape coefficients, model has " + std::to_string(model.shape_count()));
  if (!params.body_pose.allFinite() || !params.global_orient.allFinite() ||
      !params.translation.allFinite() || !params.betas.allFinite())
    throw InvalidArgument("pose parameters contain non-finite values");
}

JointTransforms skinning_transforms(const BodyModel& model, const PoseParams& params) {
  check_pose_dimensions(model, params);
  const int k = model.joint_count();
  Points joints = model.rest_joints;
  if (model.shape_count() > 0) {
    const VecX disp = model.shape_basis * params.betas;
    Points d(model.vertex_count(), 3);
    for (int v = 0; v < model.vertex_count(); ++v) d.row(v) = disp.segment<3>(3 * v).transpose();
    joints += model.joint_regressor * d;
  }

  // World transform of joint j: x -> rot[j] * x + offset[j]. Offsets are
  // accumulated as differences so the identity pose yields exact zeros.
  std::vector<Mat3> rot(k);
  std::vector<Vec3> offset(k);
  for (int j : model.topological_order()) {
    const Mat3 local = axis_angle_to_matrix<double>(params.body_pose.row(j).transpose());
    const int p = model.kinematic_parents[j];
    const Vec3 jj = joints.row(j).transpose();
    if (p == kRootParent) {
      rot[j] = local;
      offset[j] = jj - local * jj;
    } else {
      rot[j] = rot[p] * local;
      offset[j] = rot[p] * (jj - local * jj) + offset[p];
    }
  }

  const Mat3 global = axis_angle_to_matrix<double>(params.global_orient);
  JointTransforms out;
  out.rotation.resize(k);
  out.translation.resize(k);
  for (int j = 0; j < k; ++j) {
    out.rotation[j] = global * rot[j];
    out.translation[j] = global * offset[j];
  }
  out.global = global;
  out.global_translation = params.translation;
  return out;
}

Vec3 JointTransforms::apply(const Eigen::Ref<const VecX>& weights, const Vec3& rest) const {
  // Blend the displacement rest -> posed so unit weights reproduce rest exactly.
  Vec3 delta = Vec3::Zero();
  for (Eigen::Index j = 0; j < weights.size(); ++j) {
    const double w = weights[j];
    if (w == 0.0) continue;
    delta += w * ((rotation[j] * rest - rest) + translation[j]);
  }
  return rest + delta + global_translation;
}

PosedMesh pose_mesh(const BodyModel& model, const PoseParams& params) {
  const JointTransforms xf = skinning_transforms(model, params);
  const Points shaped = model.shaped_vertices(params.betas);
  const int m = model.vertex_count();

  PosedMesh out;
  out.vertices.resize(m, 3);
  for (int v = 0; v < m; ++v) {
    out.vertices.row(v) =
        xf.apply(model.skinning_weights.row(v).transpose(), shaped.row(v).transpose()).transpose();
  }

  out.face_frames.resize(model.face_count());
  for (int f = 0; f < model.face_count(); ++f) {
    const auto idx = model.faces.row(f);
    const Mat3 canon =
        face_tangent_frame(model.template_vertices.row(idx[0]).transpose(),
                           model.template_vertices.row(idx[1]).transpose(),
                           model.template_vertices.row(idx[2]).transpose());
    const Mat3 posed = face_tangent_frame(out.vertices.row(idx[0]).transpose(),
                                          out.vertices.row(idx[1]).transpose(),
                                          out.vertices.row(idx[2]).transpose());
    out.face_frames[f] = posed * canon.transpose();
  }
  return out;
}

Points regress_joints(const BodyModel& model, const Points& vertices) {
  if (vertices.rows() != model.vertex_count())
    throw DimensionError("regress_joints: expected " + std::to_string(model.vertex_count()) +
                         " vertices, got " + std::to_string(vertices.rows()));
  return model.joint_regressor * vertices;
}

MotionSequence normalize_shape(const MotionSequence& seq) {
  if (seq.frames.empty()) throw InvalidArgument("normalize_shape: empty motion sequence");
  const auto b = seq.frames.front().betas.size();
  // Mean of deviations from frame 0, so shared betas come back bit-exact.
  const VecX first = seq.frames.front().betas;
  VecX dev = VecX::Zero(b);
  for (const auto& f : seq.frames) {
    if (f.betas.size() != b) throw DimensionError("normalize_shape: inconsistent betas length");
    dev += f.betas - first;
  }
  const VecX mean = first + dev / static_cast<double>(seq.frames.size());
  MotionSequence out = seq;
  for (auto& f : out.frames) f.betas = mean;
  return out;
}

// ---------------------------------------------------------------------------
// File formats

MotionSequence load_motion(const std::filesystem::path& path) {
  const json doc = read_json_file(path);
  try {
    if (doc.at("format_version").get<int>() != kMotionFormatVersion)
      throw SchemaError("motion file: unsupported format_version");
    const int k = doc.at("K").get<int>();
    const int b = doc.at("B").get<int>();
    MotionSequence seq;
    seq.action_label = doc.at("action_label").get<std::string>();
    seq.subject_id = doc.at("subject_id").get<std::string>();
    seq.source_id = doc.value("source_id", std::string{});
    const auto& frames = doc.at("frames");
    if (!frames.is_array() || frames.empty())
      throw SchemaError("motion file: frames must be a non-empty array");
    for (std::size_t i = 0; i < frames.size(); ++i) {
      const auto& fr = frames[i];
      PoseParams p;
      p.body_pose = points_from_json(fr.at("body_pose"));
      if (p.body_pose.rows() != k)
        throw SchemaError("motion file: frame " + std::to_string(i) + " has " +
                          std::to_string(p.body_pose.rows()) + " joints, header says K=" +
                          std::to_string(k));
      p.global_orient = vec3_from_json(fr.at("global_orient"));
      p.translation = vec3_from_json(fr.at("translation"));
      p.betas = vecx_from_json(fr.at("betas"));
      if (p.betas.size() != b)
        throw SchemaError("motion file: frame " + std::to_string(i) + " has " +
                          std::to_string(p.betas.size()) + " betas, header says B=" +
                          std::to_string(b));
      seq.frames.push_back(std::move(p));
    }
    return seq;
  } catch (const json::exception& e) {
    throw SchemaError("motion file " + path.string() + ": " + e.what());
  }
}

void save_motion(const MotionSequence& seq, const std::filesystem::path& path) {
  if (seq.frames.empty()) throw InvalidArgument("save_motion: empty sequence");
  json doc;
  doc["format_version"] = kMotionFormatVersion;
  doc["K"] = seq.frames.front().body_pose.rows();
  doc["B"] = seq.frames.front().betas.size();
  doc["action_label"] = seq.action_label;
  doc["subject_id"] = seq.subject_id;
  doc["source_id"] = seq.source_id;
  json frames = json::array();
  for (const auto& f : seq.frames) {
    frames.push_back({{"body_pose", to_json(f.body_pose)},
                      {"global_orient", to_json(f.global_orient)},
                      {"translation", to_json(f.translation)},
                      {"betas", to_json(f.betas)}});
  }
  doc["frames"] = std::move(frames);
  write_json_file(doc, path);
}

BodyModel load_body_model(const std::filesystem::path& path) {
  const json doc = read_json_file(path);
  BodyModel m;
  try {
    if (doc.at("format_version").get<int>() != kBodyFormatVersion)
      throw SchemaError("body model file: unsupported format_version");
    m.id = doc.at("id").get<std::string>();
    m.template_vertices = points_from_json(doc.at("template_vertices"));
    m.faces = faces_from_json(doc.at("faces"));
    m.rest_joints = points_from_json(doc.at("rest_joints"));
    m.skinning_weights = matx_from_json(doc.at("skinning_weights"));
    m.joint_regressor = matx_from_json(doc.at("joint_regressor"));
    m.kinematic_parents = doc.at("kinematic_parents").get<std::vector<int>>();
    const int verts = static_cast<int>(m.template_vertices.rows());
    const auto& basis = doc.at("shape_basis");  // [M][3][B]
    const int b = doc.at("B").get<int>();
    if (static_cast<int>(basis.size()) != verts)
      throw SchemaError("body model file: shape_basis must have M entries");
    m.shape_basis = MatX::Zero(3 * verts, b);
    for (int v = 0; v < verts; ++v) {
      for (int a = 0; a < 3; ++a) {
        const auto& row = basis[v].at(a);
        if (static_cast<int>(row.size()) != b)
          throw SchemaError("body model file: shape_basis entry has wrong B");
        for (int c = 0; c < b; ++c) m.shape_basis(3 * v + a, c) = row[c].get<double>();
      }
    }
  } catch (const json::exception& e) {
    throw SchemaError("body model file " + path.string() + ": " + e.what());
  }
  m.validate();
  return m;
}

void save_body_model(const BodyModel& model, const std::filesystem::path& path) {
  json doc;
  doc["format_version"] = kBodyFormatVersion;
  doc["id"] = model.id;
  doc["K"] = model.joint_count();
  doc["M"] = model.vertex_count();
  doc["B"] = model.shape_count();
  doc["template_vertices"] = to_json(model.template_vertices);
  doc["faces"] = to_json(model.faces);
  doc["rest_joints"] = to_json(model.rest_joints);
  doc["skinning_weights"] = to_json(model.skinning_weights);
  doc["joint_regressor"] = to_json(model.joint_regressor);
  doc["kinematic_parents"] = model.kinematic_parents;
  json basis = json::array();
  for (int v = 0; v < model.vertex_count(); ++v) {
    json per_axis = json::array();
    for (int a = 0; a < 3; ++a) {
      json row = json::array();
      for (int c = 0; c < model.shape_count(); ++c) row.push_back(model.shape_basis(3 * v + a, c));
      per_axis.push_back(std::move(row));
    }
    basis.push_back(std::move(per_axis));
  }
  doc["shape_basis"] = std::move(basis);
  write_json_file(doc, path);
}

}  // namespace synthpose
