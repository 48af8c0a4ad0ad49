// SPDX-License-Identifier: Apache-2.0
#include "synthpose/animate.hpp"
#include "synthpose/image_io.hpp"
#include "synthpose/parallel.hpp"
#include "synthpose/pipeline.hpp"
#include "synthpose/toy_assets.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace synthpose;

namespace {

enum Exit { kOk = 0, kValidation = 1, kUnknownCommand = 2, kConfig = 3, kRuntime = 4 };

struct Overrides {
  std::string config;
  std::string root = ".";
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  bool json = false;
  std::optional<int> frames, width, height, gaussians, iterations, subjects, clips;
  std::optional<std::string> denoiser, body_model, attribute_space, backgrounds, sport;
  std::vector<std::string> denoiser_cmd;
  std::vector<double> target;
};

void add_common(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config, "JSON pipeline config (flags override it)");
  app->add_option("--root", o.root, "Directory all other paths are relative to");
  app->add_option("--seed", o.seed, "Base seed");
  app->add_option("--threads", o.threads, "Worker count (fallback: GEN4D_THREADS, then 1)")
      ->check(CLI::PositiveNumber);
  app->add_option("--frames", o.frames, "Frames per clip");
  app->add_option("--width", o.width, "Image width");
  app->add_option("--height", o.height, "Image height");
  app->add_option("--gaussians", o.gaussians, "Gaussians per avatar");
  app->add_option("--iterations", o.iterations, "Guidance iterations");
  app->add_option("--subjects", o.subjects, "Subjects in the demo");
  app->add_option("--clips-per-subject", o.clips, "Clips per subject in the demo");
  app->add_option("--denoiser", o.denoiser, "perfect | constant_bias | color_target | external");
  app->add_option("--denoiser-cmd", o.denoiser_cmd, "argv of an external denoiser");
  app->add_option("--target", o.target, "color_target RGB")->expected(3);
  app->add_option("--body-model", o.body_model, "Body model JSON");
  app->add_option("--attribute-space", o.attribute_space, "Attribute space JSON");
  app->add_option("--backgrounds", o.backgrounds, "Background library directory");
  app->add_option("--sport", o.sport, "Sport label");
}

PipelineConfig effective_config(const Overrides& o) {
  PipelineConfig cfg = o.config.empty() ? PipelineConfig() : load_pipeline_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.frames) cfg.frames = *o.frames;
  if (o.width) cfg.width = *o.width;
  if (o.height) cfg.height = *o.height;
  if (o.gaussians) cfg.gaussians = *o.gaussians;
  if (o.iterations) cfg.guidance.iterations = *o.iterations;
  if (o.subjects) cfg.subjects = *o.subjects;
  if (o.clips) cfg.clips_per_subject = *o.clips;
  if (o.denoiser) cfg.denoiser.mode = *o.denoiser;
  if (!o.denoiser_cmd.empty()) cfg.denoiser.command = o.denoiser_cmd;
  if (!o.target.empty()) cfg.denoiser.target = Vec3(o.target[0], o.target[1], o.target[2]);
  if (o.body_model) cfg.body_model = *o.body_model;
  if (o.attribute_space) cfg.attribute_space = *o.attribute_space;
  if (o.backgrounds) cfg.backgrounds = *o.backgrounds;
  if (o.sport) cfg.sport = *o.sport;
  if (o.threads) {
    cfg.threads = *o.threads;
  } else if (const char* env = std::getenv("GEN4D_THREADS"); env && *env) {
    try {
      cfg.threads = std::stoi(env);
    } catch (const std::exception&) {
      throw InvalidArgument(std::string("GEN4D_THREADS is not an integer: ") + env);
    }
    if (cfg.threads < 1) throw InvalidArgument("GEN4D_THREADS must be positive");
  }
  cfg.validate();
  return cfg;
}

std::string frame_name(std::size_t i, const char* suffix) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%06zu%s", i, suffix);
  return buf;
}

std::vector<DeformedCloud> load_clouds(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir / "clouds"))
    if (e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<DeformedCloud> out;
  for (const auto& f : files) out.push_back(load_cloud(f));
  return out;
}

void print_report(const ValidationReport& r, bool as_json) {
  if (as_json) {
    json v = json::array();
    for (const auto& x : r.violations) v.push_back({{"where", x.where}, {"message", x.message}});
    std::cout << json{{"ok", r.ok()},
                      {"clips_checked", r.clips_checked},
                      {"frames_checked", r.frames_checked},
                      {"max_reprojection_error", r.max_reprojection_error},
                      {"violations", v}}
                     .dump(2)
              << "\n";
    return;
  }
  for (const auto& x : r.violations) std::cout << x.where << ": " << x.message << "\n";
  std::printf("%d clips, %d frames, max reprojection %.3g px, %zu violations\n", r.clips_checked,
              r.frames_checked, r.max_reprojection_error, r.violations.size());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Motion-driven synthetic human pose dataset generator"};
  app.require_subcommand(1);
  Overrides o;

  std::string out, prompts_path, avatar_path, motion_path, action = "swing", subject = "subject_00",
      clip_id = "clip_00", anim_dir, staging, dataset = "dataset", pred, dump_gt, split = "test";
  int count = 8, index = 0;
  std::vector<double> thresholds = {5.0, 10.0, 15.0};

  auto* c_prompts = app.add_subcommand("prompts", "Write balanced prompt templates as JSONL");
  c_prompts->add_option("--n", count, "Number of prompts")->check(CLI::PositiveNumber);
  c_prompts->add_option("--out", out, "Output JSONL")->required();

  auto* c_avatar = app.add_subcommand("avatar", "Optimize a canonical avatar for one prompt");
  c_avatar->add_option("--prompts", prompts_path, "Prompt JSONL")->required();
  c_avatar->add_option("--index", index, "Prompt line (0-based)");
  c_avatar->add_option("--out", out, "Output avatar JSON")->required();

  auto* c_animate = app.add_subcommand("animate", "Deform an avatar along a motion into a cloud cache");
  c_animate->add_option("--avatar", avatar_path, "Avatar JSON")->required();
  c_animate->add_option("--motion", motion_path, "Motion JSON (default: toy motion for --action)");
  c_animate->add_option("--action", action, "Toy motion action");
  c_animate->add_option("--subject", subject, "Subject id for toy motions");
  c_animate->add_option("--out", out, "Output directory")->required();

  auto* c_render = app.add_subcommand("render", "Render a cloud cache to linear rgb/alpha/depth images");
  c_render->add_option("--anim", anim_dir, "Directory written by animate")->required();
  c_render->add_option("--clip-id", clip_id, "Clip id (selects camera)");
  c_render->add_option("--out", out, "Output directory")->required();

  auto* c_compose = app.add_subcommand("compose", "Shade, shadow, composite and annotate a clip");
  c_compose->add_option("--anim", anim_dir, "Directory written by animate")->required();
  c_compose->add_option("--clip-id", clip_id, "Clip id (selects camera and scene)");
  c_compose->add_option("--out", out, "Staging directory")->required();

  auto* c_export = app.add_subcommand("export", "Split staged clips by subject into a dataset");
  c_export->add_option("--staging", staging, "Staging directory")->required();
  c_export->add_option("--out", out, "Dataset root")->required();

  auto* c_validate = app.add_subcommand("validate", "Check a dataset; exit 1 on violations");
  c_validate->add_option("--dataset", dataset, "Dataset root");

  auto* c_eval = app.add_subcommand("eval", "AP of predictions against dataset ground truth");
  c_eval->add_option("--dataset", dataset, "Dataset root");
  c_eval->add_option("--pred", pred, "Predictions JSONL");
  c_eval->add_option("--split", split, "train | valid | test | all");
  c_eval->add_option("--thresholds", thresholds, "Pixel thresholds")->delimiter(',');
  c_eval->add_option("--dump-gt", dump_gt, "Write ground truth of every split as predictions and exit");

  auto* c_demo = app.add_subcommand("demo", "End-to-end mini dataset from the bundled toy assets");
  c_demo->add_option("--out", dataset, "Dataset root");

  for (CLI::App* sub : app.get_subcommands({})) {
    add_common(sub, o);
    sub->add_flag("--json", o.json, "Machine-readable output (validate, eval)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ExtrasError& e) {
    app.exit(e);
    return kUnknownCommand;
  } catch (const CLI::RequiredError& e) {
    app.exit(e);
    return app.get_subcommands().empty() ? kUnknownCommand : kConfig;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  PipelineConfig cfg;
  try {
    if (!fs::is_directory(o.root)) throw IoError("--root is not a directory: " + o.root);
    fs::current_path(o.root);
    cfg = effective_config(o);
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  }

  try {
    CLI::App* cmd = app.get_subcommands().front();
    if (cmd == c_prompts) {
      const auto prompts = make_prompts(cfg, count);
      const fs::path p(out);
      write_prompts_jsonl(prompts, p);
      echo_config(cfg, p.parent_path().empty() ? fs::path(".") : p.parent_path());
    } else if (cmd == c_avatar) {
      const auto prompts = read_prompts_jsonl(prompts_path);
      if (index < 0 || index >= static_cast<int>(prompts.size()))
        throw InvalidArgument("--index out of range for " + prompts_path);
      const BodyModel model = pipeline_body_model(cfg);
      const auto avatar = build_avatar(cfg, model, prompts[static_cast<std::size_t>(index)],
                                       derive_seed(cfg.seed, stable_hash("avatar"), index));
      const fs::path p(out);
      if (!p.parent_path().empty()) fs::create_directories(p.parent_path());
      save_avatar(avatar, p);
      echo_config(cfg, p.parent_path().empty() ? fs::path(".") : p.parent_path());
    } else if (cmd == c_animate) {
      const BodyModel model = pipeline_body_model(cfg);
      const CanonicalAvatar avatar = load_avatar(avatar_path);
      const MotionSequence motion =
          motion_path.empty()
              ? make_toy_motion(model, action, cfg.frames, subject,
                                derive_seed(cfg.seed, stable_hash("motion:" + subject + ":" + action)))
              : load_motion(motion_path);
      const auto clouds = animate_avatar(cfg, model, avatar, motion);
      const fs::path dir(out);
      fs::remove_all(dir / "clouds");
      fs::create_directories(dir / "clouds");
      save_motion(motion, dir / "motion.json");
      parallel_for(clouds.size(), cfg.threads,
                   [&](std::size_t f) { save_cloud(clouds[f], dir / "clouds" / frame_name(f, ".json")); });
      echo_config(cfg, dir);
    } else if (cmd == c_render) {
      const auto clouds = load_clouds(anim_dir);
      const Camera cam = clip_camera(cfg, clip_id);
      const fs::path dir(out);
      fs::create_directories(dir);
      parallel_for(clouds.size(), cfg.threads, [&](std::size_t f) {
        const RenderOutput r = rasterize(clouds[f], cam);
        write_float_image(r.rgb, dir / frame_name(f, "_rgb.fimg"));
        write_float_image(r.alpha, dir / frame_name(f, "_alpha.fimg"));
        write_float_image(r.depth, dir / frame_name(f, "_depth.fimg"));
      });
      echo_config(cfg, dir);
    } else if (cmd == c_compose) {
      const BodyModel model = pipeline_body_model(cfg);
      const auto clouds = load_clouds(anim_dir);
      const MotionSequence motion = load_motion(fs::path(anim_dir) / "motion.json");
      const fs::path dir(out);
      fs::remove_all(dir / clip_id);
      compose_clip(cfg, model, clouds, motion, clip_id, dir);
      echo_config(cfg, dir);
    } else if (cmd == c_export) {
      export_dataset(cfg, staging, out);
    } else if (cmd == c_validate) {
      const ValidationReport r = validate_dataset(dataset, cfg.threads);
      print_report(r, o.json);
      return r.ok() ? kOk : kValidation;
    } else if (cmd == c_eval) {
      const std::string which = split == "all" ? "" : split;
      if (!dump_gt.empty()) {
        write_predictions(groundtruth_predictions(dataset), dump_gt);
        return kOk;
      }
      if (pred.empty()) throw InvalidArgument("eval needs --pred or --dump-gt");
      const EvalResult r = evaluate_predictions(dataset, read_predictions(pred), which, thresholds);
      if (o.json) {
        std::cout << json{{"split", split}, {"frames", r.frames}, {"thresholds", r.thresholds}, {"ap", r.ap}}
                         .dump(2)
                  << "\n";
      } else {
        std::string head, row;
        for (std::size_t i = 0; i < r.ap.size(); ++i) {
          char h[32], v[32];
          std::snprintf(h, sizeof h, "%sAP@%g", i ? "/" : "", r.thresholds[i]);
          std::snprintf(v, sizeof v, "%s%.1f", i ? "/" : "", r.ap[i]);
          head += h;
          row += v;
        }
        std::cout << head << " (" << r.frames << " frames, split " << split << ")\n" << row << "\n";
      }
    } else if (cmd == c_demo) {
      const DemoResult r = run_demo(cfg, dataset);
      print_report(r.report, o.json);
      return r.report.ok() ? kOk : kValidation;
    }
  } catch (const SchemaError& e) {
    std::cerr << "schema error: " << e.what() << "\n";
    return kConfig;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kConfig;
  } catch (const InvalidArgument& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kOk;
}
