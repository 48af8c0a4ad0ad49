// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "synthpose/body_model.hpp"
#include "synthpose/camera.hpp"
#include "synthpose/image_io.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace synthpose {

inline constexpr int kDatasetFormatVersion = 1;

/// K x 2 keypoint positions in pixels.
using Keypoints2D = Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>;

struct AnnotationRecord {
  std::string frame_path;  // relative to the clip directory
  std::array<int, 4> bbox{0, 0, 0, 0};  // x, y, w, h
  Points kp2d;  // K x 3: u, v, visibility (0 or 1)
  Points kp3d;  // K x 3, world frame
  PoseParams pose;
  std::string action_label;
  Camera camera;
  std::string subject_id;
  std::string clip_id;
  int frame_index = 0;
};

/// Inside the image (pixel extents, centers at integers) and in front of
/// the near plane.
bool keypoint_visible(const Camera& cam, const Vec3& world_point);

/// Joints of the posed body projected through `cam`, bbox from alpha >= 0.5.
AnnotationRecord annotate_frame(const BodyModel& model, const PoseParams& pose, const Camera& cam,
                                const Image& alpha, const std::string& action_label,
                                const std::string& subject_id, const std::string& clip_id,
                                int frame_index);

std::string record_to_json_line(const AnnotationRecord& r);
AnnotationRecord record_from_json_line(const std::string& line);
std::vector<AnnotationRecord> read_annotations(const std::filesystem::path& jsonl);

struct ClipMetadata {
  std::string clip_id;
  std::string subject_id;
  std::string action_label;
  int frame_count = 0;
  int keypoint_count = 0;
};

/// Writes out_dir/clip_id/{frames/NNNNNN.png, annotations.jsonl}. If
/// expected_keypoints >= 0 every record must carry that many keypoints.
ClipMetadata export_clip(std::span<const Image8> frames, std::span<const AnnotationRecord> records,
                         const std::filesystem::path& out_dir, const std::string& clip_id,
                         int expected_keypoints = -1);

inline constexpr std::array<const char*, 3> kSplitNames = {"train", "valid", "test"};

struct SplitInfo {
  std::vector<std::string> subject_ids;  // sorted
  std::vector<ClipMetadata> clips;
  int clip_count = 0;
  int frame_count = 0;
};

struct DatasetManifest {
  std::string sport;
  int format_version = kDatasetFormatVersion;
  int keypoint_count = 0;
  std::map<std::string, SplitInfo> splits;  // train, valid, test
};

/// Fraction of subjects held out for test, and of the remaining clips sent
/// to valid. The test fraction mirrors the baseball split (5 of 20).
struct SplitRatios {
  double test_subjects = 0.25;
  double valid_clips = 0.25;
};

DatasetManifest split_subjects(std::span<const ClipMetadata> clips, const SplitRatios& ratios,
                               std::uint64_t seed, const std::string& sport = "");

void write_manifest(const DatasetManifest& m, const std::filesystem::path& root);
DatasetManifest read_manifest(const std::filesystem::path& root);

struct Violation {
  std::string where;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  int clips_checked = 0;
  int frames_checked = 0;
  double max_reprojection_error = 0.0;
  [[nodiscard]] bool ok() const { return violations.empty(); }
};

inline constexpr double kReprojectionTolerance = 0.5;

/// Checks every manifest and record invariant plus file existence. Throws
/// IoError when root/manifest.json is missing.
ValidationReport validate_dataset(const std::filesystem::path& root, int threads = 1);

/// AP^k in percent: 100 x mean over frames of the fraction of visible
/// keypoints within k pixels. Frames without visible keypoints are skipped.
std::vector<double> compute_ap(std::span<const Keypoints2D> preds, std::span<const Points> gts,
                               std::span<const double> thresholds);
std::vector<double> compute_ap(std::span<const Keypoints2D> preds, std::span<const Points> gts);

}  // namespace synthpose
