// SPDX-License-Identifier: Apache-2.0
#include "synthpose/compose.hpp"

#include "synthpose/guidance.hpp"
#include "synthpose/image_io.hpp"
#include "synthpose/json_io.hpp"
#include "synthpose/parallel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

namespace synthpose {

namespace {

constexpr double kUnitTolerance = 1e-6;

void require_unit(const Vec3& v, const char* what) {
  if (!v.allFinite() || std::abs(v.norm() - 1.0) > kUnitTolerance)
    throw InvalidArgument(std::string(what) + " must be a unit vector");
}

double smoothstep(double e0, double e1, double x) {
  if (e1 <= e0) return x < e0 ? 0.0 : 1.0;
  const double t = std::clamp((x - e0) / (e1 - e0), 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

struct Disk {
  double u, v, radius, weight;
};

Image to_rgb(const Image& img, const std::filesystem::path& path) {
  if (img.channels == 3) return img;
  if (img.channels != 1 && img.channels != 4)
    throw SchemaError(path.string() + ": background needs 1, 3 or 4 channels");
  Image out(img.width, img.height, 3);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c) out(x, y, c) = img(x, y, img.channels == 1 ? 0 : c);
  return out;
}

json light_to_json(const DirectionalLight& l) {
  return {{"direction", to_json(l.direction)}, {"intensity", l.intensity}, {"ambient", l.ambient}};
}

std::filesystem::path sidecar_path(const std::filesystem::path& image_path) {
  return std::filesystem::path(image_path).replace_extension(".json");
}

double squared_norm(const Image& img) { return img.data.square().sum(); }

class MockRelightModel final : public RelightModelInterface {
 public:
  explicit MockRelightModel(const MockRelightConfig& cfg) : cfg_(cfg) {}

  Image encode(const Image& image) override { return image; }

  Image predict(const Image& noisy_latent, const DirectionalLight&, int t,
                const Image& degradation_latent) override {
    require_same_shape(noisy_latent, degradation_latent, "mock relight predict");
    const double ab = alpha_bar(t);
    Image out = noisy_latent;
    out.data = (noisy_latent.data - std::sqrt(ab) * degradation_latent.data) / std::sqrt(1.0 - ab) +
               cfg_.predict_bias;
    return out;
  }

  Image combine(const Image& latent_l1, const Image& latent_l2) override {
    require_same_shape(latent_l1, latent_l2, "mock relight combine");
    Image out = latent_l1;
    out.data = latent_l1.data + latent_l2.data + cfg_.combine_bias;
    return out;
  }

 private:
  MockRelightConfig cfg_;
};

}  // namespace

void validate_light(const DirectionalLight& light) {
  require_unit(light.direction, "light direction");
  if (!(light.intensity >= 0.0) || !std::isfinite(light.intensity))
    throw InvalidArgument("light intensity must be finite and >= 0");
  if (!(light.ambient >= 0.0) || !std::isfinite(light.ambient))
    throw InvalidArgument("light ambient must be finite and >= 0");
}

void SceneAsset::validate() const {
  require_unit(ground.normal, "ground plane normal");
  if (!std::isfinite(ground.offset)) throw InvalidArgument("ground plane offset must be finite");
  validate_light(light);
  if (!background.empty() && background.channels != 3)
    throw DimensionError("scene background must have 3 channels");
}

double shading_gain(const Vec3& normal, std::span<const DirectionalLight> lights) {
  double gain = 0.0;
  for (const auto& l : lights) gain += l.ambient + l.intensity * std::max(0.0, -normal.dot(l.direction));
  return gain;
}

DeformedCloud shade_directional(const DeformedCloud& cloud, std::span<const DirectionalLight> lights) {
  for (const auto& l : lights) validate_light(l);
  if (cloud.face_normals.size() != cloud.size())
    throw DimensionError("shade_directional: one face normal per Gaussian required");
  DeformedCloud out = cloud;
  for (std::size_t i = 0; i < out.size(); ++i)
    out.gaussians[i].color = cloud.gaussians[i].color * shading_gain(cloud.face_normals[i], lights);
  return out;
}

DeformedCloud shade_directional(const DeformedCloud& cloud, const DirectionalLight& light) {
  return shade_directional(cloud, std::span<const DirectionalLight>(&light, 1));
}

ShadowLayer cast_shadow(const DeformedCloud& cloud, const SceneAsset& scene, const Camera& cam,
                        const ShadowConfig& cfg) {
  scene.validate();
  cam.validate();
  if (!(cfg.strength >= 0.0 && cfg.strength <= 1.0))
    throw InvalidArgument("shadow strength must lie in [0, 1]");
  if (!(cfg.radius_scale > 0.0)) throw InvalidArgument("shadow radius_scale must be positive");
  if (!(cfg.inner_fraction >= 0.0 && cfg.inner_fraction <= 1.0))
    throw InvalidArgument("shadow inner_fraction must lie in [0, 1]");

  ShadowLayer layer;
  layer.attenuation = Image(cam.width, cam.height, 1, 1.0);
  const Vec3& n = scene.ground.normal;
  const Vec3& d = scene.light.direction;
  const double denom = n.dot(d);
  if (std::abs(denom) < 1e-9) {
    layer.no_shadow = true;
    return layer;
  }

  std::vector<Disk> disks;
  disks.reserve(cloud.size());
  for (const auto& g : cloud.gaussians) {
    const double height = n.dot(g.position) - scene.ground.offset;
    const double s = -height / denom;
    if (s < 0.0) continue;
    const Vec3 hit = g.position + s * d;
    const auto p = try_project(cam, hit);
    if (!p) continue;
    const double world_radius =
        cfg.radius_scale * g.log_scale.array().exp().mean() * (1.0 + std::abs(height));
    const double r = std::max(0.5, cam.fx * world_radius / p->z);
    disks.push_back({p->u, p->v, r, sigmoid(g.opacity_logit)});
  }

  constexpr int kTile = 16;
  const int tiles_x = (cam.width + kTile - 1) / kTile;
  const int tiles_y = (cam.height + kTile - 1) / kTile;
  std::vector<std::vector<int>> bins(static_cast<std::size_t>(tiles_x) * tiles_y);
  for (std::size_t i = 0; i < disks.size(); ++i) {
    const Disk& k = disks[i];
    const int x0 = std::max(0, static_cast<int>(std::floor((k.u - k.radius) / kTile)));
    const int x1 = std::min(tiles_x - 1, static_cast<int>(std::floor((k.u + k.radius) / kTile)));
    const int y0 = std::max(0, static_cast<int>(std::floor((k.v - k.radius) / kTile)));
    const int y1 = std::min(tiles_y - 1, static_cast<int>(std::floor((k.v + k.radius) / kTile)));
    for (int ty = y0; ty <= y1; ++ty)
      for (int tx = x0; tx <= x1; ++tx) bins[static_cast<std::size_t>(ty) * tiles_x + tx].push_back(static_cast<int>(i));
  }

  parallel_for(static_cast<std::size_t>(cam.height), cfg.threads, [&](std::size_t row) {
    const double py = static_cast<double>(row);
    const auto* tile_row = &bins[(row / kTile) * static_cast<std::size_t>(tiles_x)];
    for (int x = 0; x < cam.width; ++x) {
      double clear = 1.0;
      for (int idx : tile_row[x / kTile]) {
        const Disk& k = disks[static_cast<std::size_t>(idx)];
        const double dy = py - k.v;
        if (std::abs(dy) >= k.radius) continue;
        const double dx = x - k.u;
        if (std::abs(dx) >= k.radius) continue;
        const double dist = std::sqrt(dx * dx + dy * dy);
        const double w = k.weight * (1.0 - smoothstep(cfg.inner_fraction * k.radius, k.radius, dist));
        clear *= 1.0 - w;
      }
      layer.attenuation(x, static_cast<int>(row)) = 1.0 - cfg.strength * (1.0 - clear);
    }
  });
  return layer;
}

Image composite_hdr(const RenderOutput& fg, const Image& attenuation, const Image& background) {
  require_same_shape(fg.rgb, background, "composite");
  if (attenuation.width != fg.rgb.width || attenuation.height != fg.rgb.height ||
      attenuation.channels != 1 || fg.alpha.width != fg.rgb.width || fg.alpha.height != fg.rgb.height)
    throw DimensionError("composite: resolution mismatch between foreground, alpha and shadow");
  Image out(fg.rgb.width, fg.rgb.height, 3);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x) {
      const double keep = (1.0 - fg.alpha(x, y)) * attenuation(x, y);
      for (int c = 0; c < 3; ++c) out(x, y, c) = fg.rgb(x, y, c) + keep * background(x, y, c);
    }
  return out;
}

Image tonemap(const Image& hdr) {
  Image out = hdr;
  out.data = reinhard(hdr.data.max(0.0)).unaryExpr([](double v) { return srgb_encode(v); });
  return out;
}

Image composite(const RenderOutput& fg, const ShadowLayer& shadow, const SceneAsset& scene) {
  return tonemap(composite_hdr(fg, shadow.attenuation, scene.background));
}

Image resize_bilinear(const Image& img, int width, int height) {
  if (img.empty() || width <= 0 || height <= 0) throw InvalidArgument("resize_bilinear: empty size");
  if (img.width == width && img.height == height) return img;
  Image out(width, height, img.channels);
  const double sx = static_cast<double>(img.width) / width;
  const double sy = static_cast<double>(img.height) / height;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, img.height - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double ty = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, img.width - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, img.width - 1);
      const double tx = fx - x0;
      for (int c = 0; c < img.channels; ++c)
        out(x, y, c) = (1 - ty) * ((1 - tx) * img(x0, y0, c) + tx * img(x1, y0, c)) +
                       ty * ((1 - tx) * img(x0, y1, c) + tx * img(x1, y1, c));
    }
  }
  return out;
}

SceneAsset procedural_scene(int width, int height, std::uint64_t seed) {
  if (width <= 0 || height <= 0) throw InvalidArgument("procedural_scene: empty size");
  static const std::array<const char*, 6> kPrompts = {
      "an outdoor tennis court on a sunny afternoon", "a grass football pitch under clear skies",
      "a sandy beach volleyball court",              "an indoor gym with wooden floors",
      "a running track in a city stadium",           "a baseball field at dusk"};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Vec3 sky_top(0.25 + 0.1 * u(rng), 0.45 + 0.1 * u(rng), 0.85 + 0.1 * u(rng));
  const Vec3 sky_low(0.80, 0.82, 0.80);
  const Vec3 ground_a(0.15 + 0.3 * u(rng), 0.25 + 0.3 * u(rng), 0.10 + 0.2 * u(rng));
  const Vec3 ground_b = 0.7 * ground_a;
  const int horizon = height / 2;
  const int check = std::max(1, width / 8);

  SceneAsset s;
  s.background = Image(width, height, 3);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      Vec3 c;
      if (y < horizon) {
        const double t = horizon > 1 ? static_cast<double>(y) / (horizon - 1) : 1.0;
        c = (1 - t) * sky_top + t * sky_low;
      } else {
        c = ((x / check + (y - horizon) / check) % 2 == 0) ? ground_a : ground_b;
      }
      for (int k = 0; k < 3; ++k) s.background(x, y, k) = c[k];
    }
  const double az = 2.0 * M_PI * u(rng);
  const double el = (35.0 + 35.0 * u(rng)) * M_PI / 180.0;
  s.light.direction = -Vec3(std::cos(el) * std::sin(az), std::sin(el), std::cos(el) * std::cos(az));
  s.light.intensity = 1.0 + 0.5 * u(rng);
  s.light.ambient = 0.25;
  s.scene_prompt = kPrompts[seed % kPrompts.size()];
  return s;
}

SceneAsset load_scene(const std::filesystem::path& image_path) {
  const auto side = sidecar_path(image_path);
  if (!std::filesystem::exists(image_path)) throw IoError("missing background " + image_path.string());
  const json meta = read_json_file(side);
  SceneAsset s;
  const std::string ext = image_path.extension().string();
  if (ext == ".fimg") {
    s.background = to_rgb(read_float_image(image_path), image_path);
  } else if (ext == ".png") {
    Image img = to_rgb(dequantize8(read_png(image_path)), image_path);
    img.data = img.data.unaryExpr([](double v) { return srgb_decode(v); });
    s.background = img;
  } else {
    throw SchemaError(image_path.string() + ": background must be .png or .fimg");
  }
  try {
    s.ground.normal = vec3_from_json(meta.at("ground_plane").at("normal"));
    s.ground.offset = meta.at("ground_plane").at("offset").get<double>();
    s.light.direction = vec3_from_json(meta.at("light").at("direction"));
    s.light.intensity = meta.at("light").at("intensity").get<double>();
    s.light.ambient = meta.at("light").at("ambient").get<double>();
    s.scene_prompt = meta.at("scene_prompt").get<std::string>();
  } catch (const json::exception& e) {
    throw SchemaError(side.string() + ": " + e.what());
  }
  try {
    s.validate();
  } catch (const InvalidArgument& e) {
    throw SchemaError(side.string() + ": " + e.what());
  }
  return s;
}

void save_scene(const SceneAsset& scene, const std::filesystem::path& image_path) {
  scene.validate();
  if (image_path.extension() == ".fimg") {
    write_float_image(scene.background, image_path);
  } else {
    Image enc = scene.background;
    enc.data = enc.data.max(0.0).unaryExpr([](double v) { return srgb_encode(v); });
    write_png(quantize8(enc), image_path);
  }
  json meta;
  meta["ground_plane"] = {{"normal", to_json(scene.ground.normal)}, {"offset", scene.ground.offset}};
  meta["light"] = light_to_json(scene.light);
  meta["scene_prompt"] = scene.scene_prompt;
  write_json_file(meta, sidecar_path(image_path));
}

std::vector<SceneAsset> load_background_library(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("no background directory " + dir.string());
  std::vector<std::filesystem::path> images;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    const auto ext = e.path().extension();
    if ((ext == ".png" || ext == ".fimg") && std::filesystem::exists(sidecar_path(e.path())))
      images.push_back(e.path());
  }
  std::sort(images.begin(), images.end());
  std::vector<SceneAsset> out;
  for (const auto& p : images) out.push_back(load_scene(p));
  return out;
}

std::unique_ptr<RelightModelInterface> mock_relight_model(const MockRelightConfig& cfg) {
  return std::make_unique<MockRelightModel>(cfg);
}

RelightLossTerms relight_consistency_loss(RelightModelInterface& model, const RelightBatch& batch,
                                          double lambda_v, double lambda_ic) {
  if (batch.t < 0 || batch.t >= kNumTimesteps)
    throw InvalidArgument("relight loss: timestep out of range");
  const Image z = model.encode(batch.appearance);
  const Image zd = model.encode(batch.degradation);
  require_same_shape(z, batch.noise, "relight loss noise");
  const double ab = alpha_bar(batch.t);
  Image noisy = z;
  noisy.data = std::sqrt(ab) * z.data + std::sqrt(1.0 - ab) * batch.noise.data;
  const Image pred = model.predict(noisy, batch.light, batch.t, zd);
  require_same_shape(pred, batch.noise, "relight loss prediction");

  const Image z12 = model.encode(batch.appearance_l12);
  const Image zc = model.combine(model.encode(batch.appearance_l1), model.encode(batch.appearance_l2));
  require_same_shape(z12, zc, "relight loss combined latent");
  if (batch.mask.width != z12.width || batch.mask.height != z12.height || batch.mask.channels != 1)
    throw DimensionError("relight loss: mask must be latent-sized with one channel");
  if (!((batch.mask.data == 0.0) || (batch.mask.data == 1.0)).all())
    throw InvalidArgument("relight loss: mask must be binary");

  Image r1 = pred;
  r1.data = batch.noise.data - pred.data;
  Image r2 = z12;
  for (int y = 0; y < z12.height; ++y)
    for (int x = 0; x < z12.width; ++x)
      for (int c = 0; c < z12.channels; ++c)
        r2(x, y, c) = batch.mask(x, y) * (z12(x, y, c) - zc(x, y, c));

  RelightLossTerms out;
  out.appearance = squared_norm(r1);
  out.consistency = squared_norm(r2);
  out.total = lambda_v * out.appearance + lambda_ic * out.consistency;
  return out;
}

}  // namespace synthpose
