// SPDX-License-Identifier: Apache-2.0
#include "synthpose/pipeline.hpp"

#include "synthpose/animate.hpp"
#include "synthpose/parallel.hpp"
#include "synthpose/toy_assets.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

namespace synthpose {

namespace fs = std::filesystem;

namespace {

using Pair = std::pair<double, double>;

json pair_json(const Pair& p) { return json::array({p.first, p.second}); }

Pair pair_from(const json& j, const char* key) {
  if (!j.is_array() || j.size() != 2) throw SchemaError(std::string(key) + " must be [min, max]");
  return {j[0].get<double>(), j[1].get<double>()};
}

/// Reads `key` from `obj` into `out` when present and records it as seen.
template <typename T>
void take(const json& obj, const char* key, T& out, std::set<std::string>& seen) {
  seen.insert(key);
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

void reject_unknown(const json& obj, const std::set<std::string>& seen, const std::string& where) {
  for (const auto& [k, v] : obj.items())
    if (!seen.contains(k)) throw SchemaError("config: unknown key '" + where + k + "'");
}

const json& section(const json& doc, const char* key, std::set<std::string>& seen) {
  static const json empty = json::object();
  seen.insert(key);
  if (!doc.contains(key)) return empty;
  if (!doc.at(key).is_object()) throw SchemaError(std::string("config: '") + key + "' must be an object");
  return doc.at(key);
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

enum : std::uint64_t { kStreamPrompts = 1, kStreamAvatar, kStreamMotion, kStreamCamera, kStreamScene, kStreamSplit, kStreamInit };

std::string clip_name(int subject, int clip) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "s%02d_c%02d", subject, clip);
  return buf;
}

std::string subject_name(int subject) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "subject_%02d", subject);
  return buf;
}

std::unique_ptr<DenoiserInterface> make_denoiser(const DenoiserSpec& spec, const PromptTemplate& prompt) {
  if (spec.mode == "external") return std::make_unique<ExternalDenoiser>(spec.command);
  MockDenoiserConfig m;
  m.bias = spec.bias;
  m.gain = spec.gain;
  if (spec.mode == "perfect") {
    m.mode = MockMode::perfect;
  } else if (spec.mode == "constant_bias") {
    m.mode = MockMode::constant_bias;
  } else {
    m.mode = MockMode::color_target;
    if (spec.target) {
      m.target = *spec.target;
    } else {
      const auto it = prompt.assignment.find("clothing color");
      m.target = clothing_rgb(it == prompt.assignment.end() ? "" : it->second);
    }
  }
  return mock_denoiser(m);
}

}  // namespace

PipelineConfig::PipelineConfig() {
  cameras.azimuth_deg = {0.0, 360.0};
  cameras.elevation_deg = {0.0, 20.0};
  cameras.radius = {3.0, 4.0};
  guidance.iterations = 200;
  guidance.trainable = {false, false, false, true, true};
}

Camera PipelineConfig::intrinsics() const { return intrinsics_from_fov(fov_deg, width, height); }

void PipelineConfig::validate() const {
  if (width <= 0 || height <= 0) throw InvalidArgument("config: width and height must be positive");
  if (!(fov_deg > 0.0 && fov_deg < 180.0)) throw InvalidArgument("config: fov_deg must lie in (0, 180)");
  if (gaussians <= 0) throw InvalidArgument("config: gaussians must be positive");
  if (subjects < 2) throw InvalidArgument("config: need at least 2 subjects for a disjoint test split");
  if (clips_per_subject < 1 || frames < 1)
    throw InvalidArgument("config: clips_per_subject and frames must be positive");
  if (actions.empty()) throw InvalidArgument("config: actions must not be empty");
  static const std::set<std::string> modes = {"perfect", "constant_bias", "color_target", "external"};
  if (!modes.contains(denoiser.mode)) throw InvalidArgument("config: unknown denoiser mode '" + denoiser.mode + "'");
  if (denoiser.mode == "external" && denoiser.command.empty())
    throw InvalidArgument("config: external denoiser needs a command");
  CameraSamplerConfig c = cameras;
  c.intrinsics = intrinsics();
  c.validate();
  guidance.validate();
}

json config_to_json(const PipelineConfig& cfg) {
  json j;
  j["body_model"] = cfg.body_model;
  j["attribute_space"] = cfg.attribute_space;
  j["backgrounds"] = cfg.backgrounds;
  j["sport"] = cfg.sport;
  j["seed"] = cfg.seed;
  j["camera"] = {{"azimuth_deg", pair_json(cfg.cameras.azimuth_deg)},
                 {"elevation_deg", pair_json(cfg.cameras.elevation_deg)},
                 {"radius", pair_json(cfg.cameras.radius)},
                 {"target", to_json(cfg.cameras.target)},
                 {"fov_deg", cfg.fov_deg},
                 {"width", cfg.width},
                 {"height", cfg.height}};
  const GuidanceConfig& g = cfg.guidance;
  const LearningRates& lr = g.learning_rates;
  json den = {{"mode", cfg.denoiser.mode},
              {"bias", cfg.denoiser.bias},
              {"gain", cfg.denoiser.gain},
              {"command", cfg.denoiser.command}};
  den["target"] = cfg.denoiser.target ? to_json(*cfg.denoiser.target) : json(nullptr);
  j["guidance"] = {{"gaussians", cfg.gaussians},
                   {"iterations", g.iterations},
                   {"resolution", g.resolution},
                   {"lambda_rgb", g.lambda_rgb},
                   {"lambda_depth", g.lambda_depth},
                   {"t_min", g.t_min},
                   {"t_max", g.t_max},
                   {"noise_weight", g.noise_weight},
                   {"densify", g.densify},
                   {"learning_rates",
                    {{"position", lr.position},
                     {"color", lr.color},
                     {"opacity", lr.opacity},
                     {"scale", lr.scale},
                     {"rotation", lr.rotation}}},
                   {"trainable",
                    {{"position", g.trainable.position},
                     {"rotation", g.trainable.rotation},
                     {"scale", g.trainable.scale},
                     {"opacity", g.trainable.opacity},
                     {"color", g.trainable.color}}},
                   {"denoiser", den}};
  j["compose"] = {{"shadow_strength", cfg.shadow.strength},
                  {"shadow_radius_scale", cfg.shadow.radius_scale}};
  j["dataset"] = {{"subjects", cfg.subjects},
                  {"clips_per_subject", cfg.clips_per_subject},
                  {"frames", cfg.frames},
                  {"actions", cfg.actions},
                  {"cull_tau", cfg.cull_tau},
                  {"test_subjects", cfg.split.test_subjects},
                  {"valid_clips", cfg.split.valid_clips}};
  return j;
}

PipelineConfig config_from_json(const json& doc) {
  if (!doc.is_object()) throw SchemaError("config: top level must be an object");
  PipelineConfig cfg;
  try {
    std::set<std::string> seen;
    take(doc, "body_model", cfg.body_model, seen);
    take(doc, "attribute_space", cfg.attribute_space, seen);
    take(doc, "backgrounds", cfg.backgrounds, seen);
    take(doc, "sport", cfg.sport, seen);
    take(doc, "seed", cfg.seed, seen);

    {
      std::set<std::string> s;
      const json& cam = section(doc, "camera", seen);
      s.insert({"azimuth_deg", "elevation_deg", "radius", "target"});
      if (cam.contains("azimuth_deg")) cfg.cameras.azimuth_deg = pair_from(cam.at("azimuth_deg"), "azimuth_deg");
      if (cam.contains("elevation_deg"))
        cfg.cameras.elevation_deg = pair_from(cam.at("elevation_deg"), "elevation_deg");
      if (cam.contains("radius")) cfg.cameras.radius = pair_from(cam.at("radius"), "radius");
      if (cam.contains("target")) cfg.cameras.target = vec3_from_json(cam.at("target"));
      take(cam, "fov_deg", cfg.fov_deg, s);
      take(cam, "width", cfg.width, s);
      take(cam, "height", cfg.height, s);
      reject_unknown(cam, s, "camera.");
    }
    {
      std::set<std::string> s;
      const json& g = section(doc, "guidance", seen);
      take(g, "gaussians", cfg.gaussians, s);
      take(g, "iterations", cfg.guidance.iterations, s);
      take(g, "resolution", cfg.guidance.resolution, s);
      take(g, "lambda_rgb", cfg.guidance.lambda_rgb, s);
      take(g, "lambda_depth", cfg.guidance.lambda_depth, s);
      take(g, "t_min", cfg.guidance.t_min, s);
      take(g, "t_max", cfg.guidance.t_max, s);
      take(g, "noise_weight", cfg.guidance.noise_weight, s);
      take(g, "densify", cfg.guidance.densify, s);
      {
        std::set<std::string> s2;
        const json& lr = section(g, "learning_rates", s);
        LearningRates& r = cfg.guidance.learning_rates;
        take(lr, "position", r.position, s2);
        take(lr, "color", r.color, s2);
        take(lr, "opacity", r.opacity, s2);
        take(lr, "scale", r.scale, s2);
        take(lr, "rotation", r.rotation, s2);
        reject_unknown(lr, s2, "guidance.learning_rates.");
      }
      {
        std::set<std::string> s2;
        const json& tr = section(g, "trainable", s);
        TrainableGroups& t = cfg.guidance.trainable;
        take(tr, "position", t.position, s2);
        take(tr, "rotation", t.rotation, s2);
        take(tr, "scale", t.scale, s2);
        take(tr, "opacity", t.opacity, s2);
        take(tr, "color", t.color, s2);
        reject_unknown(tr, s2, "guidance.trainable.");
      }
      {
        std::set<std::string> s2;
        const json& d = section(g, "denoiser", s);
        take(d, "mode", cfg.denoiser.mode, s2);
        take(d, "bias", cfg.denoiser.bias, s2);
        take(d, "gain", cfg.denoiser.gain, s2);
        take(d, "command", cfg.denoiser.command, s2);
        s2.insert("target");
        if (d.contains("target") && !d.at("target").is_null())
          cfg.denoiser.target = vec3_from_json(d.at("target"));
        reject_unknown(d, s2, "guidance.denoiser.");
      }
      reject_unknown(g, s, "guidance.");
    }
    {
      std::set<std::string> s;
      const json& c = section(doc, "compose", seen);
      take(c, "shadow_strength", cfg.shadow.strength, s);
      take(c, "shadow_radius_scale", cfg.shadow.radius_scale, s);
      reject_unknown(c, s, "compose.");
    }
    {
      std::set<std::string> s;
      const json& d = section(doc, "dataset", seen);
      take(d, "subjects", cfg.subjects, s);
      take(d, "clips_per_subject", cfg.clips_per_subject, s);
      take(d, "frames", cfg.frames, s);
      take(d, "actions", cfg.actions, s);
      take(d, "cull_tau", cfg.cull_tau, s);
      take(d, "test_subjects", cfg.split.test_subjects, s);
      take(d, "valid_clips", cfg.split.valid_clips, s);
      reject_unknown(d, s, "dataset.");
    }
    reject_unknown(doc, seen, "");
  } catch (const json::exception& e) {
    throw SchemaError(std::string("config: ") + e.what());
  }
  return cfg;
}

PipelineConfig load_pipeline_config(const fs::path& path) {
  if (!fs::exists(path)) throw IoError("config file not found: " + path.string());
  return config_from_json(read_json_file(path));
}

void echo_config(const PipelineConfig& cfg, const fs::path& dir) {
  fs::create_directories(dir);
  write_json_file(config_to_json(cfg), dir / "config.json");
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index) {
  return splitmix64(splitmix64(splitmix64(base) ^ stream) ^ index);
}

std::uint64_t stable_hash(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

BodyModel pipeline_body_model(const PipelineConfig& cfg) {
  return cfg.body_model.empty() ? make_toy_humanoid() : load_body_model(cfg.body_model);
}

AttributeSpace pipeline_attribute_space(const PipelineConfig& cfg) {
  return cfg.attribute_space.empty() ? default_attribute_space() : load_attribute_space(cfg.attribute_space);
}

Vec3 clothing_rgb(const std::string& name) {
  static const std::map<std::string, Vec3> palette = {
      {"white", Vec3(0.85, 0.85, 0.85)},  {"navy", Vec3(0.04, 0.07, 0.32)},
      {"red", Vec3(0.75, 0.06, 0.05)},    {"green", Vec3(0.06, 0.45, 0.10)},
      {"black", Vec3(0.03, 0.03, 0.03)},  {"orange", Vec3(0.90, 0.40, 0.04)},
      {"purple", Vec3(0.35, 0.08, 0.50)}, {"yellow", Vec3(0.90, 0.80, 0.08)}};
  const auto it = palette.find(name);
  return it == palette.end() ? Vec3::Constant(0.5) : it->second;
}

std::vector<PromptTemplate> make_prompts(const PipelineConfig& cfg, int n) {
  return generate_prompts(pipeline_attribute_space(cfg), n, cfg.sport, std::nullopt,
                          derive_seed(cfg.seed, kStreamPrompts));
}

CanonicalAvatar build_avatar(const PipelineConfig& cfg, const BodyModel& model,
                             const PromptTemplate& prompt, std::uint64_t seed,
                             OptimizationTrace* trace) {
  const CanonicalAvatar start = init_avatar(model, cfg.gaussians, derive_seed(seed, kStreamInit));
  auto denoiser = make_denoiser(cfg.denoiser, prompt);
  GuidanceConfig g = cfg.guidance;
  g.cameras = cfg.cameras;
  g.cameras.intrinsics = cfg.intrinsics();
  return optimize_avatar(start, model, *denoiser, prompt, g, derive_seed(seed, kStreamAvatar), trace);
}

std::vector<DeformedCloud> animate_avatar(const PipelineConfig& cfg, const BodyModel& model,
                                          const CanonicalAvatar& avatar, const MotionSequence& motion) {
  const double tau = cfg.cull_tau >= 0.0 ? cfg.cull_tau : default_cull_tau(model);
  std::vector<DeformedCloud> out(motion.frames.size());
  parallel_for(out.size(), cfg.threads, [&](std::size_t f) {
    const PoseParams& p = motion.frames[f];
    out[f] = cull_deviants(deform(avatar, model, p, static_cast<int>(f)),
                           lbs_expected_positions(avatar, model, p), tau);
  });
  return out;
}

Camera clip_camera(const PipelineConfig& cfg, const std::string& clip_id) {
  CameraSamplerConfig c = cfg.cameras;
  c.intrinsics = cfg.intrinsics();
  return sample_camera(derive_seed(cfg.seed, kStreamCamera, stable_hash(clip_id)), c).camera;
}

SceneAsset clip_scene(const PipelineConfig& cfg, const std::string& clip_id) {
  const std::uint64_t seed = derive_seed(cfg.seed, kStreamScene, stable_hash(clip_id));
  if (cfg.backgrounds.empty()) return procedural_scene(cfg.width, cfg.height, seed);
  const auto library = load_background_library(cfg.backgrounds);
  if (library.empty()) throw IoError("no backgrounds with sidecars in " + cfg.backgrounds);
  SceneAsset s = library[seed % library.size()];
  s.background = resize_bilinear(s.background, cfg.width, cfg.height);
  return s;
}

ComposedFrame compose_frame(const PipelineConfig& cfg, const BodyModel& model,
                            const DeformedCloud& cloud, const PoseParams& pose,
                            const SceneAsset& scene, const Camera& cam,
                            const MotionSequence& motion, const std::string& clip_id, int frame) {
  const RenderOutput fg = rasterize(shade_directional(cloud, scene.light), cam);
  const ShadowLayer shadow = cast_shadow(cloud, scene, cam, cfg.shadow);
  ComposedFrame out;
  out.image = quantize8(composite(fg, shadow, scene));
  out.record = annotate_frame(model, pose, cam, fg.alpha, motion.action_label, motion.subject_id,
                              clip_id, frame);
  return out;
}

ClipMetadata compose_clip(const PipelineConfig& cfg, const BodyModel& model,
                          const std::vector<DeformedCloud>& clouds, const MotionSequence& motion,
                          const std::string& clip_id, const fs::path& out_dir) {
  if (clouds.size() != motion.frames.size())
    throw DimensionError("compose_clip: " + std::to_string(clouds.size()) + " clouds vs " +
                         std::to_string(motion.frames.size()) + " motion frames");
  const Camera cam = clip_camera(cfg, clip_id);
  const SceneAsset scene = clip_scene(cfg, clip_id);
  std::vector<Image8> images(clouds.size());
  std::vector<AnnotationRecord> records(clouds.size());
  PipelineConfig single = cfg;
  single.shadow.threads = 1;
  parallel_for(clouds.size(), cfg.threads, [&](std::size_t f) {
    ComposedFrame c = compose_frame(single, model, clouds[f], motion.frames[f], scene, cam, motion,
                                    clip_id, static_cast<int>(f));
    images[f] = std::move(c.image);
    records[f] = std::move(c.record);
  });
  ClipMetadata meta = export_clip(images, records, out_dir, clip_id, model.joint_count());
  json side = {{"clip_id", meta.clip_id},
               {"subject_id", meta.subject_id},
               {"action_label", meta.action_label},
               {"frame_count", meta.frame_count},
               {"keypoint_count", meta.keypoint_count},
               {"scene_prompt", scene.scene_prompt}};
  write_json_file(side, out_dir / clip_id / "clip.json");
  return meta;
}

DatasetManifest export_dataset(const PipelineConfig& cfg, const fs::path& staging, const fs::path& root) {
  if (!fs::is_directory(staging)) throw IoError("no staging directory " + staging.string());
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(staging))
    if (e.is_directory() && fs::exists(e.path() / "clip.json")) dirs.push_back(e.path());
  std::sort(dirs.begin(), dirs.end());
  std::vector<ClipMetadata> clips;
  for (const auto& d : dirs) {
    const json side = read_json_file(d / "clip.json");
    ClipMetadata m;
    try {
      m.clip_id = side.at("clip_id").get<std::string>();
      m.subject_id = side.at("subject_id").get<std::string>();
      m.action_label = side.at("action_label").get<std::string>();
      m.frame_count = side.at("frame_count").get<int>();
      m.keypoint_count = side.at("keypoint_count").get<int>();
    } catch (const json::exception& e) {
      throw SchemaError((d / "clip.json").string() + ": " + e.what());
    }
    clips.push_back(m);
  }
  if (clips.empty()) throw IoError("no staged clips in " + staging.string());
  const DatasetManifest man =
      split_subjects(clips, cfg.split, derive_seed(cfg.seed, kStreamSplit), cfg.sport);
  for (const auto& [split, info] : man.splits)
    for (const auto& c : info.clips) {
      const fs::path src = staging / c.clip_id;
      const fs::path dst = root / split / c.clip_id;
      fs::remove_all(dst);
      fs::create_directories(dst / "frames");
      for (const auto& e : fs::directory_iterator(src / "frames"))
        fs::copy_file(e.path(), dst / "frames" / e.path().filename());
      fs::copy_file(src / "annotations.jsonl", dst / "annotations.jsonl");
    }
  write_manifest(man, root);
  echo_config(cfg, root);
  return man;
}

DemoResult run_demo(const PipelineConfig& cfg, const fs::path& root) {
  cfg.validate();
  const BodyModel model = pipeline_body_model(cfg);
  const std::vector<PromptTemplate> prompts = make_prompts(cfg, cfg.subjects);

  std::vector<ClipMetadata> plan;
  std::vector<MotionSequence> motions;
  for (int s = 0; s < cfg.subjects; ++s)
    for (int c = 0; c < cfg.clips_per_subject; ++c) {
      const std::string action =
          cfg.actions[static_cast<std::size_t>(s * cfg.clips_per_subject + c) % cfg.actions.size()];
      motions.push_back(make_toy_motion(model, action, cfg.frames, subject_name(s),
                                        derive_seed(cfg.seed, kStreamMotion, motions.size())));
      ClipMetadata m;
      m.clip_id = clip_name(s, c);
      m.subject_id = subject_name(s);
      m.action_label = action;
      m.frame_count = cfg.frames;
      m.keypoint_count = model.joint_count();
      plan.push_back(m);
    }
  DemoResult result;
  result.manifest = split_subjects(plan, cfg.split, derive_seed(cfg.seed, kStreamSplit), cfg.sport);
  std::map<std::string, std::string> split_of;
  for (const auto& [split, info] : result.manifest.splits)
    for (const auto& c : info.clips) split_of[c.clip_id] = split;

  fs::create_directories(root);
  write_prompts_jsonl(prompts, root / "prompts.jsonl");
  for (int s = 0; s < cfg.subjects; ++s) {
    const CanonicalAvatar avatar =
        build_avatar(cfg, model, prompts[static_cast<std::size_t>(s)], derive_seed(cfg.seed, kStreamAvatar, s));
    for (int c = 0; c < cfg.clips_per_subject; ++c) {
      const std::size_t k = static_cast<std::size_t>(s * cfg.clips_per_subject + c);
      const std::string& id = plan[k].clip_id;
      const auto clouds = animate_avatar(cfg, model, avatar, motions[k]);
      const fs::path split_dir = root / split_of.at(id);
      fs::remove_all(split_dir / id);
      compose_clip(cfg, model, clouds, motions[k], id, split_dir);
      fs::remove(split_dir / id / "clip.json");
    }
  }
  write_manifest(result.manifest, root);
  echo_config(cfg, root);
  result.report = validate_dataset(root, cfg.threads);
  return result;
}

std::vector<FramePrediction> read_predictions(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open predictions " + path.string());
  std::vector<FramePrediction> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      FramePrediction p;
      p.clip_id = j.at("clip_id").get<std::string>();
      p.frame_index = j.at("frame_index").get<int>();
      const auto& kp = j.at("kp2d");
      p.kp2d.resize(static_cast<Eigen::Index>(kp.size()), 2);
      for (std::size_t i = 0; i < kp.size(); ++i) {
        if (kp[i].size() < 2) throw SchemaError("kp2d rows need u and v");
        p.kp2d(static_cast<Eigen::Index>(i), 0) = kp[i][0].get<double>();
        p.kp2d(static_cast<Eigen::Index>(i), 1) = kp[i][1].get<double>();
      }
      out.push_back(std::move(p));
    } catch (const json::exception& e) {
      throw SchemaError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void write_predictions(const std::vector<FramePrediction>& preds, const fs::path& path) {
  std::string text;
  for (const auto& p : preds) {
    json kp = json::array();
    for (Eigen::Index i = 0; i < p.kp2d.rows(); ++i) kp.push_back({p.kp2d(i, 0), p.kp2d(i, 1)});
    text += json{{"clip_id", p.clip_id}, {"frame_index", p.frame_index}, {"kp2d", kp}}.dump() + "\n";
  }
  write_text_file(text, path);
}

namespace {

std::vector<std::pair<std::string, AnnotationRecord>> split_records(const fs::path& root,
                                                                    const std::string& split) {
  const DatasetManifest man = read_manifest(root);
  std::vector<std::pair<std::string, AnnotationRecord>> out;
  for (const auto& [name, info] : man.splits) {
    if (!split.empty() && name != split) continue;
    for (const auto& c : info.clips)
      for (auto& r : read_annotations(root / name / c.clip_id / "annotations.jsonl"))
        out.emplace_back(name, std::move(r));
  }
  if (!split.empty() && !man.splits.contains(split)) throw InvalidArgument("unknown split '" + split + "'");
  return out;
}

}  // namespace

std::vector<FramePrediction> groundtruth_predictions(const fs::path& root, const std::string& split) {
  std::vector<FramePrediction> out;
  for (const auto& [name, r] : split_records(root, split))
    out.push_back({r.clip_id, r.frame_index, r.kp2d.leftCols<2>()});
  return out;
}

EvalResult evaluate_predictions(const fs::path& root, const std::vector<FramePrediction>& preds,
                                const std::string& split, const std::vector<double>& thresholds) {
  std::map<std::pair<std::string, int>, const FramePrediction*> index;
  for (const auto& p : preds)
    if (!index.emplace(std::make_pair(p.clip_id, p.frame_index), &p).second)
      throw InvalidArgument("duplicate prediction for " + p.clip_id + " frame " + std::to_string(p.frame_index));
  std::vector<Keypoints2D> pk;
  std::vector<Points> gk;
  for (const auto& [name, r] : split_records(root, split)) {
    const auto it = index.find({r.clip_id, r.frame_index});
    if (it == index.end())
      throw InvalidArgument("no prediction for " + r.clip_id + " frame " + std::to_string(r.frame_index));
    pk.push_back(it->second->kp2d);
    gk.push_back(r.kp2d);
  }
  EvalResult res;
  res.thresholds = thresholds;
  res.ap = compute_ap(pk, gk, thresholds);
  res.frames = static_cast<int>(gk.size());
  return res;
}

}  // namespace synthpose
