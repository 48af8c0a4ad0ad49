// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "synthpose/compose.hpp"
#include "synthpose/dataset.hpp"
#include "synthpose/guidance.hpp"
#include "synthpose/json_io.hpp"
#include "synthpose/prompts.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace synthpose {

/// How avatars are guided. mode: perfect | constant_bias | color_target |
/// external. color_target without a target uses the prompt's clothing color.
struct DenoiserSpec {
  std::string mode = "color_target";
  std::optional<Vec3> target;
  double bias = 0.0;
  double gain = 1.0;
  std::vector<std::string> command;  // argv of the external child
};

struct PipelineConfig {
  std::string body_model;       // empty: bundled toy humanoid
  std::string attribute_space;  // empty: bundled default space
  std::string backgrounds;      // empty: procedural scenes
  std::string sport = "baseball";
  std::uint64_t seed = 7;

  CameraSamplerConfig cameras;  // intrinsics rebuilt from fov/width/height
  double fov_deg = 60.0;
  int width = 256;
  int height = 256;

  int gaussians = 1000;
  GuidanceConfig guidance;
  DenoiserSpec denoiser;

  ShadowConfig shadow;

  int subjects = 3;
  int clips_per_subject = 2;
  int frames = 30;
  std::vector<std::string> actions = {"swing", "run", "throw", "jump"};
  double cull_tau = -1.0;  // negative: default_cull_tau()
  SplitRatios split;

  /// Worker count; never written to echoed configs.
  int threads = 1;

  PipelineConfig();
  void validate() const;
  [[nodiscard]] Camera intrinsics() const;
};

json config_to_json(const PipelineConfig& cfg);
/// Overrides the defaults with the keys present in `doc`; unknown keys are
/// a SchemaError.
PipelineConfig config_from_json(const json& doc);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);
/// Writes <dir>/config.json.
void echo_config(const PipelineConfig& cfg, const std::filesystem::path& dir);

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index = 0);
std::uint64_t stable_hash(const std::string& s);

BodyModel pipeline_body_model(const PipelineConfig& cfg);
AttributeSpace pipeline_attribute_space(const PipelineConfig& cfg);

/// Linear RGB for a clothing color name; mid-gray when unknown.
Vec3 clothing_rgb(const std::string& name);

std::vector<PromptTemplate> make_prompts(const PipelineConfig& cfg, int n);

CanonicalAvatar build_avatar(const PipelineConfig& cfg, const BodyModel& model,
                             const PromptTemplate& prompt, std::uint64_t seed,
                             OptimizationTrace* trace = nullptr);

/// Deformed and culled clouds, one per motion frame.
std::vector<DeformedCloud> animate_avatar(const PipelineConfig& cfg, const BodyModel& model,
                                          const CanonicalAvatar& avatar, const MotionSequence& motion);

/// Fixed per-clip camera drawn from the sampler.
Camera clip_camera(const PipelineConfig& cfg, const std::string& clip_id);
SceneAsset clip_scene(const PipelineConfig& cfg, const std::string& clip_id);

struct ComposedFrame {
  Image8 image;
  AnnotationRecord record;
};

/// Shade, render, shadow, composite and annotate one frame.
ComposedFrame compose_frame(const PipelineConfig& cfg, const BodyModel& model,
                            const DeformedCloud& cloud, const PoseParams& pose,
                            const SceneAsset& scene, const Camera& cam,
                            const MotionSequence& motion, const std::string& clip_id, int frame);

/// Composes every frame of a clip (parallel over frames) and writes it with
/// export_clip() under out_dir/clip_id.
ClipMetadata compose_clip(const PipelineConfig& cfg, const BodyModel& model,
                          const std::vector<DeformedCloud>& clouds, const MotionSequence& motion,
                          const std::string& clip_id, const std::filesystem::path& out_dir);

/// Splits staged clips (subdirectories with annotations.jsonl) into
/// root/<split>/<clip_id> and writes the manifest.
DatasetManifest export_dataset(const PipelineConfig& cfg, const std::filesystem::path& staging,
                               const std::filesystem::path& root);

struct DemoResult {
  DatasetManifest manifest;
  ValidationReport report;
};

/// Prompts, avatars, motions, composition and export of a mini dataset.
DemoResult run_demo(const PipelineConfig& cfg, const std::filesystem::path& root);

/// Prediction file: one JSON line per frame {"clip_id", "frame_index", "kp2d": [[u, v], ...]}.
struct FramePrediction {
  std::string clip_id;
  int frame_index = 0;
  Keypoints2D kp2d;
};

std::vector<FramePrediction> read_predictions(const std::filesystem::path& path);
void write_predictions(const std::vector<FramePrediction>& preds, const std::filesystem::path& path);

/// Ground truth of the given split (all splits when empty) as predictions.
std::vector<FramePrediction> groundtruth_predictions(const std::filesystem::path& root,
                                                     const std::string& split = "");

struct EvalResult {
  std::vector<double> thresholds;
  std::vector<double> ap;
  int frames = 0;
};

/// Matches predictions to ground-truth frames by (clip_id, frame_index);
/// every ground-truth frame of the split needs a prediction.
EvalResult evaluate_predictions(const std::filesystem::path& root,
                                const std::vector<FramePrediction>& preds, const std::string& split,
                                const std::vector<double>& thresholds);

}  // namespace synthpose
