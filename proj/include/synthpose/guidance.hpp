// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "synthpose/avatar.hpp"
#include "synthpose/camera.hpp"
#include "synthpose/rasterizer.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace synthpose {

/// Canonical skeleton drawn as colored bones and joints (H x W x 3).
struct PoseMap {
  Image image;
};

PoseMap render_pose_map(const BodyModel& model, const Camera& cam);

/// DDPM linear-beta schedule over 1000 steps.
inline constexpr int kNumTimesteps = 1000;
double alpha_bar(int t);

/// Everything a denoiser may look at for one prediction. Real models use
/// the noisy latents; the mocks read the clean renders and the injected noise.
struct DenoiseRequest {
  const Image& noisy_rgb;
  const Image& noisy_depth;
  int t;
  const PoseMap& pose_map;
  const PromptTemplate& prompt;
  const Image& clean_rgb;
  const Image& clean_depth;
  const Image& clean_alpha;
  const Image& noise_rgb;
  const Image& noise_depth;
};

struct NoisePrediction {
  Image eps_rgb;
  Image eps_depth;
};

class DenoiserInterface {
 public:
  virtual ~DenoiserInterface() = default;
  virtual NoisePrediction predict_noise(const DenoiseRequest& req) = 0;
};

enum class MockMode { perfect, constant_bias, color_target };

/// perfect: eps = noise. constant_bias: eps = noise + bias on both branches.
/// color_target: eps_rgb = noise + gain * (rgb - target * alpha), eps_depth = noise.
struct MockDenoiserConfig {
  MockMode mode = MockMode::perfect;
  double bias = 0.0;
  Vec3 target = Vec3::Zero();
  double gain = 1.0;
};

std::unique_ptr<DenoiserInterface> mock_denoiser(const MockDenoiserConfig& cfg);

/// Talks to a child process over stdin/stdout. Per request it writes one JSON
/// header line followed by NPY (v1.0, '<f8') tensors in the order listed in
/// the header's "tensors" field, and reads back two NPY tensors: eps_rgb then
/// eps_depth. The child stays alive for the lifetime of this object.
class ExternalDenoiser final : public DenoiserInterface {
 public:
  explicit ExternalDenoiser(std::vector<std::string> argv);
  ~ExternalDenoiser() override;
  ExternalDenoiser(const ExternalDenoiser&) = delete;
  ExternalDenoiser& operator=(const ExternalDenoiser&) = delete;
  NoisePrediction predict_noise(const DenoiseRequest& req) override;

 private:
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
};

std::string encode_npy(const Image& img);
/// Parses one NPY tensor of shape (H, W, C) from a byte stream reader.
Image decode_npy(const std::function<void(char*, std::size_t)>& read_exact);

struct LearningRates {
  double position = 2e-4;
  double color = 1e-2;
  double opacity = 5e-2;
  double scale = 5e-3;
  double rotation = 1e-3;
};

struct TrainableGroups {
  bool position = true;
  bool rotation = true;
  bool scale = true;
  bool opacity = true;
  bool color = true;
};

struct GuidanceConfig {
  double lambda_rgb = 0.5;
  double lambda_depth = 0.5;
  int t_min = 20;
  int t_max = 980;
  /// "constant" (w_t = 1) or "one_minus_alpha_bar".
  std::string noise_weight = "constant";
  int iterations = 1000;
  LearningRates learning_rates;
  TrainableGroups trainable;
  int resolution = 128;
  int batch = 1;
  bool densify = true;
  DensifyConfig densify_config;
  CameraSamplerConfig cameras;
  /// When set, every iteration renders from this camera (intrinsics ignored;
  /// resolution comes from `resolution`).
  std::optional<CameraSample> fixed_view;
  RasterConfig raster;

  void validate() const;
  [[nodiscard]] double weight(int t) const;
};

struct SdsGradients {
  Image grad_rgb;
  Image grad_depth;
};

/// Per-pixel dual-branch SDS residual, weighted by lambda and w_t.
SdsGradients sds_pixel_gradients(DenoiserInterface& denoiser, const Image& rgb, const Image& depth,
                                 const Image& alpha, const PoseMap& pose_map,
                                 const PromptTemplate& prompt, int t, const Image& noise_rgb,
                                 const Image& noise_depth, const GuidanceConfig& cfg);

/// Affine depth normalization d = (D - zmin * A) / (zmax - zmin), with
/// zmin/zmax the extremes of D / A over pixels with A > 0.5 (held constant
/// under differentiation). Background pixels map to 0.
struct DepthNormalization {
  double zmin = 0.0;
  double zmax = 1.0;
};

DepthNormalization depth_normalization(const RenderOutput& render);
Image normalize_depth(const RenderOutput& render, const DepthNormalization& norm);

/// Parameter gradients of sum(g_rgb * rgb) + sum(g_depth * normalize_depth(render)).
std::vector<GaussianGradient> sds_parameter_gradients(std::span<const Gaussian> gaussians,
                                                      const Camera& cam, const SdsGradients& g,
                                                      const DepthNormalization& norm,
                                                      const RasterConfig& cfg = {});

/// The scalar whose parameter gradient sds_parameter_gradients() returns.
double sds_surrogate_loss(const RenderOutput& render, const SdsGradients& g,
                          const DepthNormalization& norm);

struct OptimizationTrace {
  std::vector<Vec3> mean_color;  // alpha-weighted mean render color per iteration
  std::vector<std::size_t> gaussian_count;
};

CanonicalAvatar optimize_avatar(const CanonicalAvatar& avatar, const BodyModel& model,
                                DenoiserInterface& denoiser, const PromptTemplate& prompt,
                                const GuidanceConfig& cfg, std::uint64_t seed,
                                OptimizationTrace* trace = nullptr);

/// Alpha-weighted mean of the premultiplied render color.
Vec3 mean_render_color(const RenderOutput& render);

}  // namespace synthpose
