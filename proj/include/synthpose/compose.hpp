// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "synthpose/animate.hpp"
#include "synthpose/camera.hpp"
#include "synthpose/rasterizer.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace synthpose {

/// Points p with normal . p = offset.
struct GroundPlane {
  Vec3 normal = Vec3::UnitY();
  double offset = 0.0;
};

/// `direction` is the direction light travels (pointing away from the source).
struct DirectionalLight {
  Vec3 direction = Vec3(0, -1, 0);
  double intensity = 1.0;
  double ambient = 0.2;
};

struct SceneAsset {
  Image background;  // H x W x 3, linear HDR
  GroundPlane ground;
  DirectionalLight light;
  std::string scene_prompt;

  void validate() const;
};

void validate_light(const DirectionalLight& light);

/// Per-Gaussian gain sum_l (ambient_l + intensity_l * max(0, n . -direction_l)).
double shading_gain(const Vec3& normal, std::span<const DirectionalLight> lights);

/// Copy of `cloud` with colors scaled by the shading gain of the bound face
/// normal. Several lights add.
DeformedCloud shade_directional(const DeformedCloud& cloud, std::span<const DirectionalLight> lights);
DeformedCloud shade_directional(const DeformedCloud& cloud, const DirectionalLight& light);

struct ShadowConfig {
  double strength = 0.6;
  /// Disk radius = radius_scale * mean Gaussian scale * (1 + distance to plane).
  double radius_scale = 1.0;
  /// Disks are opaque inside inner_fraction * radius and fade to zero at radius.
  double inner_fraction = 0.5;
  int threads = 1;
};

struct ShadowLayer {
  Image attenuation;  // H x W x 1, in [0, 1]
  /// Set when the light runs parallel to the plane; attenuation is then 1.
  bool no_shadow = false;
};

ShadowLayer cast_shadow(const DeformedCloud& cloud, const SceneAsset& scene, const Camera& cam,
                        const ShadowConfig& cfg = {});

/// Linear composite of premultiplied fg over the shadowed background:
/// rgb + (1 - alpha) * background * attenuation.
Image composite_hdr(const RenderOutput& fg, const Image& attenuation, const Image& background);

template <typename Derived>
auto reinhard(const Eigen::ArrayBase<Derived>& x) {
  return x / (1 + x);
}

template <typename Scalar>
Scalar srgb_encode(Scalar x) {
  using std::pow;
  if (x <= Scalar(0.0031308)) return Scalar(12.92) * x;
  return Scalar(1.055) * pow(x, Scalar(1) / Scalar(2.4)) - Scalar(0.055);
}

template <typename Scalar>
Scalar srgb_decode(Scalar x) {
  using std::pow;
  if (x <= Scalar(0.04045)) return x / Scalar(12.92);
  return pow((x + Scalar(0.055)) / Scalar(1.055), Scalar(2.4));
}

/// Reinhard then sRGB encode; negative inputs clamp to 0.
Image tonemap(const Image& hdr);

/// composite_hdr() followed by tonemap().
Image composite(const RenderOutput& fg, const ShadowLayer& shadow, const SceneAsset& scene);

Image resize_bilinear(const Image& img, int width, int height);

/// Sky gradient over a checkered ground, with a plane at y = 0 and a
/// seeded light.
SceneAsset procedural_scene(int width, int height, std::uint64_t seed);

/// One background image (.png as sRGB or .fimg as linear) plus the sidecar
/// <stem>.json: {"ground_plane": {"normal", "offset"}, "light": {"direction",
/// "intensity", "ambient"}, "scene_prompt"}.
SceneAsset load_scene(const std::filesystem::path& image_path);
void save_scene(const SceneAsset& scene, const std::filesystem::path& image_path);
/// Every .png / .fimg with a sidecar in `dir`, sorted by file name.
std::vector<SceneAsset> load_background_library(const std::filesystem::path& dir);

class RelightModelInterface {
 public:
  virtual ~RelightModelInterface() = default;
  virtual Image encode(const Image& image) = 0;
  virtual Image predict(const Image& noisy_latent, const DirectionalLight& light, int t,
                        const Image& degradation_latent) = 0;
  /// Latent predicted for the two lights together from the single-light latents.
  virtual Image combine(const Image& latent_l1, const Image& latent_l2) = 0;
};

/// encode is the identity. predict reads the clean latent off the
/// degradation latent and returns the noise that produced `noisy_latent`,
/// plus predict_bias. combine returns the sum plus combine_bias.
struct MockRelightConfig {
  double predict_bias = 0.0;
  double combine_bias = 0.0;
};

std::unique_ptr<RelightModelInterface> mock_relight_model(const MockRelightConfig& cfg = {});

struct RelightBatch {
  Image appearance;    // I_L
  Image degradation;   // I_d
  DirectionalLight light;
  Image appearance_l1;
  Image appearance_l2;
  Image appearance_l12;  // shaded under both lights
  Image mask;            // latent H x W x 1, entries 0 or 1
  int t = 500;
  Image noise;  // latent-shaped
};

struct RelightLossTerms {
  double appearance = 0.0;
  double consistency = 0.0;
  double total = 0.0;
};

RelightLossTerms relight_consistency_loss(RelightModelInterface& model, const RelightBatch& batch,
                                          double lambda_v = 1.0, double lambda_ic = 0.1);

}  // namespace synthpose
