// SPDX-License-Identifier: Apache-2.0
#include "synthpose/dataset.hpp"

#include "synthpose/json_io.hpp"
#include "synthpose/parallel.hpp"
#include "synthpose/rasterizer.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

namespace synthpose {

namespace {

using ojson = nlohmann::ordered_json;

std::string frame_file_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frames/%06d.png", index);
  return buf;
}

ojson camera_to_json(const Camera& c) {
  ojson rot = ojson::array();
  for (int r = 0; r < 3; ++r) rot.push_back({c.rotation(r, 0), c.rotation(r, 1), c.rotation(r, 2)});
  return {{"fx", c.fx},         {"fy", c.fy},
          {"cx", c.cx},         {"cy", c.cy},
          {"width", c.width},   {"height", c.height},
          {"rotation", rot},    {"translation", {c.translation.x(), c.translation.y(), c.translation.z()}},
          {"near", c.near},     {"far", c.far}};
}

Camera camera_from_json(const ojson& j) {
  Camera c;
  c.fx = j.at("fx").get<double>();
  c.fy = j.at("fy").get<double>();
  c.cx = j.at("cx").get<double>();
  c.cy = j.at("cy").get<double>();
  c.width = j.at("width").get<int>();
  c.height = j.at("height").get<int>();
  const auto& rot = j.at("rotation");
  if (rot.size() != 3) throw SchemaError("camera rotation must be 3x3");
  for (int r = 0; r < 3; ++r) {
    if (rot[r].size() != 3) throw SchemaError("camera rotation must be 3x3");
    for (int k = 0; k < 3; ++k) c.rotation(r, k) = rot[r][k].get<double>();
  }
  const auto& t = j.at("translation");
  if (t.size() != 3) throw SchemaError("camera translation must have 3 entries");
  c.translation = Vec3(t[0].get<double>(), t[1].get<double>(), t[2].get<double>());
  c.near = j.at("near").get<double>();
  c.far = j.at("far").get<double>();
  return c;
}

ojson rows_to_json(const Points& p) {
  ojson out = ojson::array();
  for (Eigen::Index i = 0; i < p.rows(); ++i) out.push_back({p(i, 0), p(i, 1), p(i, 2)});
  return out;
}

Points rows_from_json(const ojson& j, const char* what) {
  if (!j.is_array()) throw SchemaError(std::string(what) + " must be an array of triples");
  Points p(static_cast<Eigen::Index>(j.size()), 3);
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (j[i].size() != 3) throw SchemaError(std::string(what) + " rows must have 3 entries");
    for (int k = 0; k < 3; ++k) p(static_cast<Eigen::Index>(i), k) = j[i][k].get<double>();
  }
  return p;
}

ojson vec_to_json(const VecX& v) {
  ojson out = ojson::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

VecX vec_from_json(const ojson& j) {
  if (!j.is_array()) throw SchemaError("expected an array of numbers");
  VecX v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

Vec3 vec3_from(const ojson& j) {
  const VecX v = vec_from_json(j);
  if (v.size() != 3) throw SchemaError("expected 3 numbers");
  return v;
}

json clip_to_json(const ClipMetadata& c) {
  return {{"clip_id", c.clip_id},
          {"subject_id", c.subject_id},
          {"action_label", c.action_label},
          {"frame_count", c.frame_count}};
}

/// Fisher-Yates on raw 64-bit draws.
template <typename T>
void seeded_shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng() % i]);
}

std::string bbox_violation(const AnnotationRecord& r) {
  const auto [x, y, w, h] = r.bbox;
  if (w < 0 || h < 0) return "bbox has negative size";
  if (w == 0 && h == 0) return {};
  if (w == 0 || h == 0) return "bbox has zero area";
  if (x < 0 || y < 0 || x + w > r.camera.width || y + h > r.camera.height) return "bbox leaves the image";
  return {};
}

struct ClipCheck {
  std::vector<Violation> violations;
  int frames = 0;
  double max_reprojection = 0.0;
};

ClipCheck check_clip(const std::filesystem::path& root, const std::string& split,
                     const ClipMetadata& clip, int keypoint_count) {
  ClipCheck out;
  const std::string base = split + "/" + clip.clip_id;
  auto add = [&](const std::string& where, const std::string& msg) {
    out.violations.push_back({where, msg});
  };
  const auto dir = root / split / clip.clip_id;
  const auto ann = dir / "annotations.jsonl";
  if (!std::filesystem::exists(ann)) {
    add(base, "missing annotations.jsonl");
    return out;
  }
  std::ifstream in(ann);
  std::string line;
  int lineno = 0;
  std::set<int> seen_frames;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    ++out.frames;
    AnnotationRecord r;
    try {
      r = record_from_json_line(line);
    } catch (const Error& e) {
      add(base + "/annotations.jsonl:" + std::to_string(lineno), e.what());
      continue;
    }
    const std::string where = base + "/" + r.frame_path;
    if (r.clip_id != clip.clip_id) add(where, "clip_id '" + r.clip_id + "' does not match the manifest");
    if (r.subject_id != clip.subject_id)
      add(where, "subject_id '" + r.subject_id + "' does not match the manifest");
    if (!seen_frames.insert(r.frame_index).second)
      add(where, "duplicate frame_index " + std::to_string(r.frame_index));
    if (r.frame_path != frame_file_name(r.frame_index))
      add(where, "frame_path does not follow frames/NNNNNN.png for frame_index " +
                     std::to_string(r.frame_index));
    if (r.kp2d.rows() != keypoint_count || r.kp3d.rows() != keypoint_count) {
      add(where, "keypoint count " + std::to_string(r.kp2d.rows()) + "/" +
                     std::to_string(r.kp3d.rows()) + " differs from manifest K=" +
                     std::to_string(keypoint_count));
      continue;
    }
    try {
      r.camera.validate();
    } catch (const Error& e) {
      add(where, std::string("invalid camera: ") + e.what());
      continue;
    }
    const auto frame = dir / r.frame_path;
    if (!std::filesystem::exists(frame)) {
      add(where, "missing frame file");
    } else {
      try {
        const Image8 img = read_png(frame);
        if (img.width != r.camera.width || img.height != r.camera.height)
          add(where, "frame size differs from the camera resolution");
      } catch (const Error& e) {
        add(where, std::string("unreadable frame: ") + e.what());
      }
    }
    if (!r.pose.body_pose.allFinite() || !r.pose.global_orient.allFinite() ||
        !r.pose.translation.allFinite() || !r.pose.betas.allFinite())
      add(where, "non-finite pose parameters");
    if (const std::string b = bbox_violation(r); !b.empty()) add(where, b);

    for (int j = 0; j < keypoint_count; ++j) {
      const double u = r.kp2d(j, 0), v = r.kp2d(j, 1), vis = r.kp2d(j, 2);
      const Vec3 p3 = r.kp3d.row(j).transpose();
      const std::string joint = "joint " + std::to_string(j);
      if (vis != 0.0 && vis != 1.0) {
        add(where, joint + ": visibility must be 0 or 1");
        continue;
      }
      if (vis == 1.0 && !(u >= -0.5 && u < r.camera.width - 0.5 && v >= -0.5 &&
                          v < r.camera.height - 0.5)) {
        add(where, joint + ": visible keypoint outside the image");
        continue;
      }
      if (const auto proj = try_project(r.camera, p3)) {
        const double err = std::hypot(proj->u - u, proj->v - v);
        out.max_reprojection = std::max(out.max_reprojection, err);
        if (!(err <= kReprojectionTolerance)) {
          add(where, joint + ": reprojection error " + std::to_string(err) + " px");
          continue;
        }
      }
      if ((vis == 1.0) != keypoint_visible(r.camera, p3))
        add(where, joint + ": visibility flag disagrees with the camera");
    }
  }
  if (out.frames != clip.frame_count)
    add(base, "annotations hold " + std::to_string(out.frames) + " frames, manifest says " +
                  std::to_string(clip.frame_count));
  return out;
}

}  // namespace

bool keypoint_visible(const Camera& cam, const Vec3& world_point) {
  const auto p = try_project(cam, world_point);
  return p && p->u >= -0.5 && p->u < cam.width - 0.5 && p->v >= -0.5 && p->v < cam.height - 0.5;
}

AnnotationRecord annotate_frame(const BodyModel& model, const PoseParams& pose, const Camera& cam,
                                const Image& alpha, const std::string& action_label,
                                const std::string& subject_id, const std::string& clip_id,
                                int frame_index) {
  cam.validate();
  if (alpha.width != cam.width || alpha.height != cam.height || alpha.channels != 1)
    throw DimensionError("annotate_frame: alpha does not match the camera resolution");
  AnnotationRecord r;
  r.frame_path = frame_file_name(frame_index);
  r.kp3d = regress_joints(model, pose_mesh(model, pose).vertices);
  r.kp2d = Points::Zero(r.kp3d.rows(), 3);
  for (Eigen::Index j = 0; j < r.kp3d.rows(); ++j) {
    const Vec3 p = r.kp3d.row(j).transpose();
    if (const auto proj = try_project(cam, p)) {
      r.kp2d(j, 0) = proj->u;
      r.kp2d(j, 1) = proj->v;
      r.kp2d(j, 2) = keypoint_visible(cam, p) ? 1.0 : 0.0;
    }
  }
  const MaskBox box = mask_and_bbox(alpha, 0.5);
  if (!box.empty) r.bbox = {box.x, box.y, box.w, box.h};
  r.pose = pose;
  r.action_label = action_label;
  r.camera = cam;
  r.subject_id = subject_id;
  r.clip_id = clip_id;
  r.frame_index = frame_index;
  return r;
}

std::string record_to_json_line(const AnnotationRecord& r) {
  ojson j;
  j["frame_path"] = r.frame_path;
  j["frame_index"] = r.frame_index;
  j["clip_id"] = r.clip_id;
  j["subject_id"] = r.subject_id;
  j["action_label"] = r.action_label;
  j["bbox"] = {r.bbox[0], r.bbox[1], r.bbox[2], r.bbox[3]};
  j["kp2d"] = rows_to_json(r.kp2d);
  j["kp3d"] = rows_to_json(r.kp3d);
  j["kp3d_frame"] = "world";
  j["pose"] = {{"body_pose", rows_to_json(r.pose.body_pose)},
               {"global_orient", vec_to_json(r.pose.global_orient)},
               {"translation", vec_to_json(r.pose.translation)},
               {"betas", vec_to_json(r.pose.betas)}};
  j["camera"] = camera_to_json(r.camera);
  return j.dump();
}

AnnotationRecord record_from_json_line(const std::string& line) {
  try {
    const ojson j = ojson::parse(line);
    AnnotationRecord r;
    r.frame_path = j.at("frame_path").get<std::string>();
    r.frame_index = j.at("frame_index").get<int>();
    r.clip_id = j.at("clip_id").get<std::string>();
    r.subject_id = j.at("subject_id").get<std::string>();
    r.action_label = j.at("action_label").get<std::string>();
    const auto& b = j.at("bbox");
    if (b.size() != 4) throw SchemaError("bbox must have 4 entries");
    for (int k = 0; k < 4; ++k) r.bbox[k] = b[k].get<int>();
    r.kp2d = rows_from_json(j.at("kp2d"), "kp2d");
    r.kp3d = rows_from_json(j.at("kp3d"), "kp3d");
    if (j.at("kp3d_frame").get<std::string>() != "world")
      throw SchemaError("kp3d_frame must be \"world\"");
    const auto& p = j.at("pose");
    r.pose.body_pose = rows_from_json(p.at("body_pose"), "body_pose");
    r.pose.global_orient = vec3_from(p.at("global_orient"));
    r.pose.translation = vec3_from(p.at("translation"));
    r.pose.betas = vec_from_json(p.at("betas"));
    r.camera = camera_from_json(j.at("camera"));
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("annotation record: ") + e.what());
  }
}

std::vector<AnnotationRecord> read_annotations(const std::filesystem::path& jsonl) {
  std::ifstream in(jsonl);
  if (!in) throw IoError("cannot open " + jsonl.string());
  std::vector<AnnotationRecord> out;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(record_from_json_line(line));
  return out;
}

ClipMetadata export_clip(std::span<const Image8> frames, std::span<const AnnotationRecord> records,
                         const std::filesystem::path& out_dir, const std::string& clip_id,
                         int expected_keypoints) {
  if (frames.empty() || frames.size() != records.size())
    throw InvalidArgument("export_clip: " + std::to_string(frames.size()) + " frames vs " +
                          std::to_string(records.size()) + " records");
  ClipMetadata meta;
  meta.clip_id = clip_id;
  meta.subject_id = records.front().subject_id;
  meta.action_label = records.front().action_label;
  meta.keypoint_count = static_cast<int>(records.front().kp2d.rows());
  if (expected_keypoints >= 0 && meta.keypoint_count != expected_keypoints)
    throw SchemaError("export_clip: records carry K=" + std::to_string(meta.keypoint_count) +
                      ", manifest expects K=" + std::to_string(expected_keypoints));
  std::set<int> indices;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const AnnotationRecord& r = records[i];
    if (r.clip_id != clip_id) throw InvalidArgument("export_clip: record clip_id '" + r.clip_id + "'");
    if (r.subject_id != meta.subject_id) throw InvalidArgument("export_clip: mixed subjects in one clip");
    if (r.kp2d.rows() != meta.keypoint_count || r.kp3d.rows() != meta.keypoint_count)
      throw SchemaError("export_clip: inconsistent keypoint count in frame " + std::to_string(i));
    if (frames[i].width != r.camera.width || frames[i].height != r.camera.height)
      throw InvalidArgument("export_clip: frame " + std::to_string(i) + " size differs from its camera");
    if (!indices.insert(r.frame_index).second)
      throw InvalidArgument("export_clip: duplicate frame_index " + std::to_string(r.frame_index));
    if (r.frame_path != frame_file_name(r.frame_index))
      throw InvalidArgument("export_clip: frame_path must be " + frame_file_name(r.frame_index));
  }
  const auto dir = out_dir / clip_id;
  std::error_code ec;
  std::filesystem::create_directories(dir / "frames", ec);
  if (ec) throw IoError("cannot create " + (dir / "frames").string() + ": " + ec.message());
  std::ostringstream lines;
  for (std::size_t i = 0; i < records.size(); ++i) {
    write_png(frames[i], dir / records[i].frame_path);
    lines << record_to_json_line(records[i]) << '\n';
  }
  write_text_file(lines.str(), dir / "annotations.jsonl");
  meta.frame_count = static_cast<int>(frames.size());
  return meta;
}

DatasetManifest split_subjects(std::span<const ClipMetadata> clips, const SplitRatios& ratios,
                               std::uint64_t seed, const std::string& sport) {
  if (!(ratios.test_subjects > 0.0 && ratios.test_subjects < 1.0))
    throw InvalidArgument("split ratio test_subjects must lie in (0, 1)");
  if (!(ratios.valid_clips >= 0.0 && ratios.valid_clips < 1.0))
    throw InvalidArgument("split ratio valid_clips must lie in [0, 1)");
  std::set<std::string> subject_set, clip_ids;
  int k = -1;
  for (const auto& c : clips) {
    subject_set.insert(c.subject_id);
    if (!clip_ids.insert(c.clip_id).second) throw InvalidArgument("duplicate clip_id '" + c.clip_id + "'");
    if (k >= 0 && c.keypoint_count != k) throw SchemaError("clips disagree on the keypoint count");
    k = c.keypoint_count;
  }
  if (subject_set.size() < 2)
    throw InvalidArgument("split_subjects: need at least 2 subjects for a disjoint test split, got " +
                          std::to_string(subject_set.size()));

  std::mt19937_64 rng(seed);
  std::vector<std::string> subjects(subject_set.begin(), subject_set.end());
  seeded_shuffle(subjects, rng);
  const long n = static_cast<long>(subjects.size());
  const long n_test = std::clamp(std::lround(ratios.test_subjects * n), 1L, n - 1);
  const std::set<std::string> test(subjects.begin(), subjects.begin() + n_test);

  std::vector<ClipMetadata> trainval, test_clips;
  for (const auto& c : clips) (test.contains(c.subject_id) ? test_clips : trainval).push_back(c);
  auto by_id = [](const ClipMetadata& a, const ClipMetadata& b) { return a.clip_id < b.clip_id; };
  std::sort(trainval.begin(), trainval.end(), by_id);
  seeded_shuffle(trainval, rng);
  const long n_tv = static_cast<long>(trainval.size());
  const long n_valid = std::clamp(std::lround(ratios.valid_clips * n_tv), 0L, std::max(0L, n_tv - 1));

  DatasetManifest m;
  m.sport = sport;
  m.keypoint_count = std::max(k, 0);
  auto fill = [&](const std::string& name, std::vector<ClipMetadata> list) {
    std::sort(list.begin(), list.end(), by_id);
    SplitInfo s;
    std::set<std::string> subj;
    for (const auto& c : list) {
      subj.insert(c.subject_id);
      s.frame_count += c.frame_count;
    }
    s.subject_ids.assign(subj.begin(), subj.end());
    s.clip_count = static_cast<int>(list.size());
    s.clips = std::move(list);
    m.splits[name] = std::move(s);
  };
  fill("valid", {trainval.begin(), trainval.begin() + n_valid});
  fill("train", {trainval.begin() + n_valid, trainval.end()});
  fill("test", test_clips);
  return m;
}

void write_manifest(const DatasetManifest& m, const std::filesystem::path& root) {
  json doc;
  doc["format_version"] = m.format_version;
  doc["sport"] = m.sport;
  doc["keypoint_count"] = m.keypoint_count;
  json splits = json::object();
  for (const auto& [name, s] : m.splits) {
    json clips = json::array();
    for (const auto& c : s.clips) clips.push_back(clip_to_json(c));
    splits[name] = {{"subject_ids", s.subject_ids},
                    {"clip_count", s.clip_count},
                    {"frame_count", s.frame_count},
                    {"clips", clips}};
  }
  doc["splits"] = splits;
  std::error_code ec;
  std::filesystem::create_directories(root, ec);
  write_json_file(doc, root / "manifest.json");
}

DatasetManifest read_manifest(const std::filesystem::path& root) {
  const auto path = root / "manifest.json";
  if (!std::filesystem::exists(path)) throw IoError("missing manifest " + path.string());
  const json doc = read_json_file(path);
  try {
    DatasetManifest m;
    m.format_version = doc.at("format_version").get<int>();
    m.sport = doc.at("sport").get<std::string>();
    m.keypoint_count = doc.at("keypoint_count").get<int>();
    for (const auto& [name, s] : doc.at("splits").items()) {
      SplitInfo info;
      info.subject_ids = s.at("subject_ids").get<std::vector<std::string>>();
      info.clip_count = s.at("clip_count").get<int>();
      info.frame_count = s.at("frame_count").get<int>();
      for (const auto& c : s.at("clips")) {
        ClipMetadata cm;
        cm.clip_id = c.at("clip_id").get<std::string>();
        cm.subject_id = c.at("subject_id").get<std::string>();
        cm.action_label = c.at("action_label").get<std::string>();
        cm.frame_count = c.at("frame_count").get<int>();
        cm.keypoint_count = m.keypoint_count;
        info.clips.push_back(cm);
      }
      m.splits[name] = std::move(info);
    }
    return m;
  } catch (const json::exception& e) {
    throw SchemaError("manifest " + path.string() + ": " + e.what());
  }
}

ValidationReport validate_dataset(const std::filesystem::path& root, int threads) {
  const DatasetManifest m = read_manifest(root);
  ValidationReport report;
  auto add = [&](const std::string& where, const std::string& msg) {
    report.violations.push_back({where, msg});
  };
  if (m.format_version != kDatasetFormatVersion)
    add("manifest.json", "unsupported format_version " + std::to_string(m.format_version));
  if (m.keypoint_count <= 0) add("manifest.json", "keypoint_count must be positive");
  for (const char* name : kSplitNames)
    if (!m.splits.contains(name)) add("manifest.json", std::string("missing split '") + name + "'");
  for (const auto& [name, s] : m.splits)
    if (std::find(kSplitNames.begin(), kSplitNames.end(), name) == kSplitNames.end())
      add("manifest.json", "unknown split '" + name + "'");

  std::set<std::string> trainval_subjects, clip_ids;
  std::vector<std::pair<std::string, ClipMetadata>> work;
  for (const auto& [name, s] : m.splits) {
    std::set<std::string> subj;
    int frames = 0;
    for (const auto& c : s.clips) {
      subj.insert(c.subject_id);
      frames += c.frame_count;
      if (!clip_ids.insert(c.clip_id).second)
        add("manifest.json", "clip '" + c.clip_id + "' listed more than once");
      work.emplace_back(name, c);
    }
    const std::string where = "manifest.json:" + name;
    if (s.clip_count != static_cast<int>(s.clips.size()))
      add(where, "clip_count " + std::to_string(s.clip_count) + " but " +
                     std::to_string(s.clips.size()) + " clips listed");
    if (s.frame_count != frames)
      add(where, "frame_count " + std::to_string(s.frame_count) + " but clips sum to " +
                     std::to_string(frames));
    if (std::set<std::string>(s.subject_ids.begin(), s.subject_ids.end()) != subj)
      add(where, "subject_ids differ from the subjects of the listed clips");
    if (name != "test") trainval_subjects.insert(subj.begin(), subj.end());
  }
  if (m.splits.contains("test"))
    for (const auto& sid : m.splits.at("test").subject_ids)
      if (trainval_subjects.contains(sid))
        add("manifest.json:test", "subject '" + sid + "' also appears in train/valid");

  std::vector<ClipCheck> checks(work.size());
  parallel_for(work.size(), threads, [&](std::size_t i) {
    checks[i] = check_clip(root, work[i].first, work[i].second, m.keypoint_count);
  });
  for (auto& c : checks) {
    report.violations.insert(report.violations.end(), c.violations.begin(), c.violations.end());
    report.frames_checked += c.frames;
    report.max_reprojection_error = std::max(report.max_reprojection_error, c.max_reprojection);
  }
  report.clips_checked = static_cast<int>(work.size());
  return report;
}

std::vector<double> compute_ap(std::span<const Keypoints2D> preds, std::span<const Points> gts,
                               std::span<const double> thresholds) {
  if (preds.size() != gts.size())
    throw DimensionError("compute_ap: " + std::to_string(preds.size()) + " predicted frames vs " +
                         std::to_string(gts.size()) + " ground-truth frames");
  if (thresholds.empty()) throw InvalidArgument("compute_ap: no thresholds");
  for (double k : thresholds)
    if (!(k >= 0.0)) throw InvalidArgument("compute_ap: thresholds must be non-negative");
  std::vector<double> sum(thresholds.size(), 0.0);
  int frames = 0;
  for (std::size_t f = 0; f < preds.size(); ++f) {
    if (preds[f].rows() != gts[f].rows())
      throw DimensionError("compute_ap: frame " + std::to_string(f) + " keypoint count mismatch");
    int visible = 0;
    std::vector<int> hits(thresholds.size(), 0);
    for (Eigen::Index j = 0; j < gts[f].rows(); ++j) {
      if (gts[f](j, 2) <= 0.0) continue;
      ++visible;
      const double d = (preds[f].row(j) - gts[f].row(j).head<2>()).norm();
      for (std::size_t t = 0; t < thresholds.size(); ++t) hits[t] += d <= thresholds[t] ? 1 : 0;
    }
    if (visible == 0) continue;
    ++frames;
    for (std::size_t t = 0; t < thresholds.size(); ++t) sum[t] += static_cast<double>(hits[t]) / visible;
  }
  if (frames == 0) throw InvalidArgument("compute_ap: no frame has a visible keypoint");
  for (double& s : sum) s = 100.0 * s / frames;
  return sum;
}

std::vector<double> compute_ap(std::span<const Keypoints2D> preds, std::span<const Points> gts) {
  static constexpr std::array<double, 3> kDefault = {5.0, 10.0, 15.0};
  return compute_ap(preds, gts, kDefault);
}

}  // namespace synthpose
