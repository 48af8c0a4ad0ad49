// SPDX-License-Identifier: Apache-2.0
#include "synthpose/guidance.hpp"

#include "synthpose/animate.hpp"
#include "synthpose/json_io.hpp"

#include <csignal>
#include <cstring>
#include <random>
#include <regex>

#include <sys/wait.h>
#include <unistd.h>

namespace synthpose {

namespace {

Vec3 joint_color(int j, int k) {
  // Evenly spaced hues, full saturation.
  const double h = 6.0 * static_cast<double>(j) / std::max(k, 1);
  const double x = 1.0 - std::abs(std::fmod(h, 2.0) - 1.0);
  switch (static_cast<int>(h) % 6) {
    case 0: return {1, x, 0};
    case 1: return {x, 1, 0};
    case 2: return {0, 1, x};
    case 3: return {0, x, 1};
    case 4: return {x, 0, 1};
    default: return {1, 0, x};
  }
}

double segment_distance2(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  const double s = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (p - (a + s * ab)).squaredNorm();
}

Camera at_resolution(const Camera& cam, int res) {
  Camera out = cam;
  const double s = static_cast<double>(res) / cam.width;
  out.fx *= s;
  out.fy *= s;
  out.width = out.height = res;
  out.cx = out.cy = 0.5 * (res - 1);
  return out;
}

void step(double& x, double g, double lr) {
  if (g != 0.0) x -= lr * g;
}

template <typename Derived>
bool step_all(Eigen::MatrixBase<Derived>& x, const Eigen::MatrixBase<Derived>& g, double lr) {
  bool changed = false;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (g[i] != 0.0) {
      x[i] -= lr * g[i];
      changed = true;
    }
  }
  return changed;
}

Image standard_normal(int w, int h, int c, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Image img(w, h, c);
  for (Eigen::Index i = 0; i < img.data.size(); ++i) img.data[i] = n(rng);
  return img;
}

class MockDenoiser final : public DenoiserInterface {
 public:
  explicit MockDenoiser(const MockDenoiserConfig& cfg) : cfg_(cfg) {}

  NoisePrediction predict_noise(const DenoiseRequest& req) override {
    NoisePrediction out{req.noise_rgb, req.noise_depth};
    switch (cfg_.mode) {
      case MockMode::perfect:
        break;
      case MockMode::constant_bias:
        out.eps_rgb.data += cfg_.bias;
        out.eps_depth.data += cfg_.bias;
        break;
      case MockMode::color_target:
        for (int y = 0; y < req.clean_rgb.height; ++y) {
          for (int x = 0; x < req.clean_rgb.width; ++x) {
            const double a = req.clean_alpha(x, y);
            for (int c = 0; c < 3; ++c)
              out.eps_rgb(x, y, c) += cfg_.gain * (req.clean_rgb(x, y, c) - cfg_.target[c] * a);
          }
        }
        break;
    }
    return out;
  }

 private:
  MockDenoiserConfig cfg_;
};

void write_all(int fd, const std::string& bytes) {
  std::size_t done = 0;
  while (done < bytes.size()) {
    const ssize_t n = ::write(fd, bytes.data() + done, bytes.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw IoError(std::string("external denoiser: write failed: ") + std::strerror(errno));
    }
    done += static_cast<std::size_t>(n);
  }
}

void read_all(int fd, char* dst, std::size_t len) {
  std::size_t done = 0;
  while (done < len) {
    const ssize_t n = ::read(fd, dst + done, len - done);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) throw IoError("external denoiser: unexpected end of output");
    done += static_cast<std::size_t>(n);
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Conditioning

PoseMap render_pose_map(const BodyModel& model, const Camera& cam) {
  const int k = model.joint_count();
  std::vector<std::optional<Vec2>> px(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) {
    if (const auto p = try_project(cam, model.rest_joints.row(j).transpose())) px[j] = Vec2(p->u, p->v);
  }
  const double bone_r = std::max(1.0, cam.width / 96.0);
  const double joint_r = 2.0 * bone_r;
  PoseMap map{Image(cam.width, cam.height, 3)};
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      const Vec2 p(x, y);
      for (int j = 0; j < k; ++j) {
        const int parent = model.kinematic_parents[j];
        if (parent == kRootParent || !px[j] || !px[parent]) continue;
        if (segment_distance2(p, *px[j], *px[parent]) <= bone_r * bone_r) {
          const Vec3 c = 0.6 * joint_color(j, k);
          for (int ch = 0; ch < 3; ++ch) map.image(x, y, ch) = c[ch];
        }
      }
      for (int j = 0; j < k; ++j) {
        if (px[j] && (p - *px[j]).squaredNorm() <= joint_r * joint_r) {
          const Vec3 c = joint_color(j, k);
          for (int ch = 0; ch < 3; ++ch) map.image(x, y, ch) = c[ch];
        }
      }
    }
  }
  return map;
}

double alpha_bar(int t) {
  if (t < 0 || t >= kNumTimesteps) throw InvalidArgument("alpha_bar: timestep out of range");
  static const std::vector<double> table = [] {
    std::vector<double> ab(kNumTimesteps);
    double acc = 1.0;
    for (int i = 0; i < kNumTimesteps; ++i) {
      const double beta = 1e-4 + (0.02 - 1e-4) * i / (kNumTimesteps - 1);
      acc *= 1.0 - beta;
      ab[i] = acc;
    }
    return ab;
  }();
  return table[static_cast<std::size_t>(t)];
}

std::unique_ptr<DenoiserInterface> mock_denoiser(const MockDenoiserConfig& cfg) {
  return std::make_unique<MockDenoiser>(cfg);
}

// ---------------------------------------------------------------------------
// NPY tensors and the out-of-process adapter

std::string encode_npy(const Image& img) {
  std::string header = "{'descr': '<f8', 'fortran_order': False, 'shape': (" +
                       std::to_string(img.height) + ", " + std::to_string(img.width) + ", " +
                       std::to_string(img.channels) + "), }";
  const std::size_t unpadded = 10 + header.size() + 1;
  header.append((64 - unpadded % 64) % 64, ' ');
  header.push_back('\n');
  std::string out("\x93NUMPY\x01\x00", 8);
  const auto len = static_cast<std::uint16_t>(header.size());
  out.push_back(static_cast<char>(len & 0xff));
  out.push_back(static_cast<char>(len >> 8));
  out += header;
  out.append(reinterpret_cast<const char*>(img.data.data()), img.data.size() * sizeof(double));
  return out;
}

Image decode_npy(const std::function<void(char*, std::size_t)>& read_exact) {
  char pre[8];
  read_exact(pre, 8);
  if (std::memcmp(pre, "\x93NUMPY", 6) != 0) throw SchemaError("npy: bad magic");
  std::size_t header_len = 0;
  if (pre[6] == 1) {
    unsigned char b[2];
    read_exact(reinterpret_cast<char*>(b), 2);
    header_len = b[0] | (b[1] << 8);
  } else {
    unsigned char b[4];
    read_exact(reinterpret_cast<char*>(b), 4);
    header_len = b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::size_t>(b[3]) << 24);
  }
  std::string header(header_len, '\0');
  read_exact(header.data(), header_len);
  if (header.find("'<f8'") == std::string::npos || header.find("'fortran_order': False") == std::string::npos)
    throw SchemaError("npy: expected C-ordered little-endian float64");
  static const std::regex shape_re(R"('shape':\s*\(\s*(\d+)\s*,\s*(\d+)\s*(?:,\s*(\d+)\s*)?,?\s*\))");
  std::smatch m;
  if (!std::regex_search(header, m, shape_re)) throw SchemaError("npy: cannot parse shape");
  const int h = std::stoi(m[1]);
  const int w = std::stoi(m[2]);
  const int c = m[3].matched ? std::stoi(m[3]) : 1;
  Image img(w, h, c);
  read_exact(reinterpret_cast<char*>(img.data.data()), img.data.size() * sizeof(double));
  return img;
}

ExternalDenoiser::ExternalDenoiser(std::vector<std::string> argv) {
  if (argv.empty()) throw InvalidArgument("external denoiser: empty command");
  int in_pipe[2], out_pipe[2];
  if (::pipe(in_pipe) != 0 || ::pipe(out_pipe) != 0)
    throw IoError("external denoiser: pipe() failed");
  // A dead child must surface as an exception from write(), not a signal.
  std::signal(SIGPIPE, SIG_IGN);
  pid_ = ::fork();
  if (pid_ < 0) throw IoError("external denoiser: fork() failed");
  if (pid_ == 0) {
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    ::close(out_pipe[0]);
    ::close(out_pipe[1]);
    std::vector<char*> args;
    for (auto& a : argv) args.push_back(a.data());
    args.push_back(nullptr);
    ::execvp(args[0], args.data());
    ::_exit(127);
  }
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
}

ExternalDenoiser::~ExternalDenoiser() {
  if (to_child_ >= 0) ::close(to_child_);
  if (from_child_ >= 0) ::close(from_child_);
  if (pid_ > 0) {
    int status = 0;
    ::waitpid(pid_, &status, 0);
  }
}

NoisePrediction ExternalDenoiser::predict_noise(const DenoiseRequest& req) {
  const json header = {{"t", req.t},
                       {"alpha_bar", alpha_bar(req.t)},
                       {"prompt", req.prompt.sentence},
                       {"tensors",
                        {"noisy_rgb", "noisy_depth", "pose_map", "clean_rgb", "clean_depth",
                         "clean_alpha", "noise_rgb", "noise_depth"}}};
  std::string msg = header.dump() + "\n";
  for (const Image* img : {&req.noisy_rgb, &req.noisy_depth, &req.pose_map.image, &req.clean_rgb,
                           &req.clean_depth, &req.clean_alpha, &req.noise_rgb, &req.noise_depth})
    msg += encode_npy(*img);
  write_all(to_child_, msg);
  const auto reader = [this](char* dst, std::size_t len) { read_all(from_child_, dst, len); };
  NoisePrediction out;
  out.eps_rgb = decode_npy(reader);
  out.eps_depth = decode_npy(reader);
  return out;
}

// ---------------------------------------------------------------------------
// SDS

void GuidanceConfig::validate() const {
  if (lambda_rgb < 0.0 || lambda_depth < 0.0) throw InvalidArgument("guidance: lambdas must be >= 0");
  if (t_min < 0 || t_max >= kNumTimesteps || t_min > t_max)
    throw InvalidArgument("guidance: need 0 <= t_min <= t_max < " + std::to_string(kNumTimesteps));
  if (resolution < 8) throw InvalidArgument("guidance: resolution must be >= 8");
  if (iterations < 0) throw InvalidArgument("guidance: iterations must be >= 0");
  if (batch < 1) throw InvalidArgument("guidance: batch must be >= 1");
  if (noise_weight != "constant" && noise_weight != "one_minus_alpha_bar")
    throw InvalidArgument("guidance: unknown noise_weight '" + noise_weight + "'");
  cameras.validate();
}

double GuidanceConfig::weight(int t) const {
  return noise_weight == "constant" ? 1.0 : 1.0 - alpha_bar(t);
}

SdsGradients sds_pixel_gradients(DenoiserInterface& denoiser, const Image& rgb, const Image& depth,
                                 const Image& alpha, const PoseMap& pose_map,
                                 const PromptTemplate& prompt, int t, const Image& noise_rgb,
                                 const Image& noise_depth, const GuidanceConfig& cfg) {
  if (rgb.channels != 3 || depth.channels != 1)
    throw DimensionError("sds: expected a 3-channel rgb and 1-channel depth image");
  require_same_shape(rgb, noise_rgb, "sds rgb/noise");
  require_same_shape(depth, noise_depth, "sds depth/noise");
  require_same_shape(depth, alpha, "sds depth/alpha");
  if (depth.width != rgb.width || depth.height != rgb.height ||
      pose_map.image.width != rgb.width || pose_map.image.height != rgb.height)
    throw DimensionError("sds: rgb, depth and pose map resolutions differ");
  if (t < cfg.t_min || t > cfg.t_max)
    throw InvalidArgument("sds: timestep " + std::to_string(t) + " outside [" +
                          std::to_string(cfg.t_min) + ", " + std::to_string(cfg.t_max) + "]");

  const double ab = alpha_bar(t);
  Image noisy_rgb = rgb, noisy_depth = depth;
  noisy_rgb.data = std::sqrt(ab) * rgb.data + std::sqrt(1.0 - ab) * noise_rgb.data;
  noisy_depth.data = std::sqrt(ab) * depth.data + std::sqrt(1.0 - ab) * noise_depth.data;
  const DenoiseRequest req{noisy_rgb, noisy_depth, t,     pose_map,  prompt,
                           rgb,       depth,       alpha, noise_rgb, noise_depth};
  const NoisePrediction eps = denoiser.predict_noise(req);
  require_same_shape(eps.eps_rgb, rgb, "denoiser rgb output");
  require_same_shape(eps.eps_depth, depth, "denoiser depth output");

  const double w = cfg.weight(t);
  SdsGradients g{Image(rgb.width, rgb.height, 3), Image(depth.width, depth.height, 1)};
  if (cfg.lambda_rgb != 0.0) g.grad_rgb.data = (cfg.lambda_rgb * w) * (eps.eps_rgb.data - noise_rgb.data);
  if (cfg.lambda_depth != 0.0)
    g.grad_depth.data = (cfg.lambda_depth * w) * (eps.eps_depth.data - noise_depth.data);
  return g;
}

DepthNormalization depth_normalization(const RenderOutput& render) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (Eigen::Index i = 0; i < render.alpha.data.size(); ++i) {
    const double a = render.alpha.data[i];
    if (a <= 0.5) continue;
    const double z = render.depth.data[i] / a;
    lo = std::min(lo, z);
    hi = std::max(hi, z);
  }
  if (!(hi > lo)) return {};
  return {lo, hi};
}

Image normalize_depth(const RenderOutput& render, const DepthNormalization& norm) {
  Image d = render.depth;
  const double inv = 1.0 / (norm.zmax - norm.zmin);
  d.data = (render.depth.data - norm.zmin * render.alpha.data) * inv;
  return d;
}

std::vector<GaussianGradient> sds_parameter_gradients(std::span<const Gaussian> gaussians,
                                                      const Camera& cam, const SdsGradients& g,
                                                      const DepthNormalization& norm,
                                                      const RasterConfig& cfg) {
  const double inv = 1.0 / (norm.zmax - norm.zmin);
  Image g_depth = g.grad_depth, g_alpha = g.grad_depth;
  g_depth.data = g.grad_depth.data * inv;
  g_alpha.data = g.grad_depth.data * (-norm.zmin * inv);
  return rasterize_backward(gaussians, cam, g.grad_rgb, g_depth, g_alpha, cfg);
}

double sds_surrogate_loss(const RenderOutput& render, const SdsGradients& g,
                          const DepthNormalization& norm) {
  return (render.rgb.data * g.grad_rgb.data).sum() +
         (normalize_depth(render, norm).data * g.grad_depth.data).sum();
}

Vec3 mean_render_color(const RenderOutput& render) {
  const double total = render.alpha.data.sum();
  if (total <= 0.0) return Vec3::Zero();
  Vec3 acc = Vec3::Zero();
  for (Eigen::Index p = 0; p < render.rgb.pixel_count(); ++p)
    for (int c = 0; c < 3; ++c) acc[c] += render.rgb.data[3 * p + c];
  return acc / total;
}

// ---------------------------------------------------------------------------
// Optimization loop

CanonicalAvatar optimize_avatar(const CanonicalAvatar& avatar, const BodyModel& model,
                                DenoiserInterface& denoiser, const PromptTemplate& prompt,
                                const GuidanceConfig& cfg, std::uint64_t seed,
                                OptimizationTrace* trace) {
  cfg.validate();
  CanonicalAvatar cur = avatar;
  if (cfg.iterations == 0) return cur;

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> t_dist(cfg.t_min, cfg.t_max);
  std::vector<double> stat_sum(cur.size(), 0.0);
  int stat_count = 0;
  const LearningRates& lr = cfg.learning_rates;
  const TrainableGroups& on = cfg.trainable;

  const auto view_for = [&](std::uint64_t draw) {
    const CameraSample s = cfg.fixed_view ? *cfg.fixed_view : sample_camera(draw, cfg.cameras);
    return at_resolution(s.camera, cfg.resolution);
  };

  Camera cam;
  for (int iter = 1; iter <= cfg.iterations; ++iter) {
    std::vector<GaussianGradient> total(cur.size());
    for (int b = 0; b < cfg.batch; ++b) {
      cam = view_for(rng());
      const int t = t_dist(rng);
      const Image noise_rgb = standard_normal(cam.width, cam.height, 3, rng);
      const Image noise_depth = standard_normal(cam.width, cam.height, 1, rng);

      const std::span<const Gaussian> gs(cur.gaussians);
      const RenderOutput render = rasterize(gs, cam, cfg.raster);
      if (trace && b == 0) {
        trace->mean_color.push_back(mean_render_color(render));
        trace->gaussian_count.push_back(cur.size());
      }
      const DepthNormalization norm = depth_normalization(render);
      const Image depth = normalize_depth(render, norm);
      const PoseMap pose = render_pose_map(model, cam);
      const SdsGradients g = sds_pixel_gradients(denoiser, render.rgb, depth, render.alpha, pose,
                                                 prompt, t, noise_rgb, noise_depth, cfg);
      const auto grads = sds_parameter_gradients(gs, cam, g, norm, cfg.raster);
      for (std::size_t i = 0; i < cur.size(); ++i) {
        total[i].position += grads[i].position;
        total[i].rotation += grads[i].rotation;
        total[i].log_scale += grads[i].log_scale;
        total[i].opacity_logit += grads[i].opacity_logit;
        total[i].color += grads[i].color;
        total[i].screen_grad_norm += grads[i].screen_grad_norm;
      }
    }

    for (std::size_t i = 0; i < cur.size(); ++i) {
      Gaussian& gs = cur.gaussians[i];
      const GaussianGradient& gr = total[i];
      if (on.position) {
        Vec3 pos = gs.position;
        if (step_all(pos, Vec3(gr.position), lr.position)) {
          cur.bindings[i] = bind_to_face(model.template_vertices, model.faces, cur.bindings[i].face, pos);
          gs.position = binding_position(model.template_vertices, model.faces, cur.bindings[i]);
        }
      }
      if (on.rotation) {
        Vec4 q = gs.rotation;
        if (step_all(q, Vec4(gr.rotation), lr.rotation)) gs.rotation = q.normalized();
      }
      if (on.scale) {
        Vec3 s = gs.log_scale;
        step_all(s, Vec3(gr.log_scale), lr.scale);
        gs.log_scale = s;
      }
      if (on.opacity) step(gs.opacity_logit, gr.opacity_logit, lr.opacity);
      if (on.color) {
        Vec3 c = gs.color;
        step_all(c, Vec3(gr.color), lr.color);
        gs.color = c;
      }
      stat_sum[i] += gr.screen_grad_norm / cfg.batch;
    }
    ++stat_count;

    const auto& dc = cfg.densify_config;
    const bool scheduled = iter >= dc.start_iter && iter <= dc.end_iter && dc.interval > 0 &&
                           (iter - dc.start_iter) % dc.interval == 0;
    if (cfg.densify && scheduled) {
      std::vector<double> mean_stats(cur.size());
      for (std::size_t i = 0; i < cur.size(); ++i) mean_stats[i] = stat_sum[i] / stat_count;
      cur = densify_and_prune(cur, model, mean_stats, iter, dc);
      stat_sum.assign(cur.size(), 0.0);
      stat_count = 0;
    }
  }
  if (trace) {
    const RenderOutput final_render = rasterize(std::span<const Gaussian>(cur.gaussians), cam, cfg.raster);
    trace->mean_color.push_back(mean_render_color(final_render));
    trace->gaussian_count.push_back(cur.size());
  }
  return cur;
}

}  // namespace synthpose
