// Copyright 2026 The hybfield Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "hybfield/data/camera.hpp"
#include "hybfield/data/image.hpp"
#include "hybfield/data/scene.hpp"
#include "hybfield/data/transforms.hpp"
#include "hybfield/errors.hpp"
#include "hybfield/render/ray.hpp"

namespace hybfield {

struct DataConfig {
  std::string source = "procedural";  // "procedural" or "blender"
  std::string scene = "soft_sphere";  // procedural preset
  std::string path;                   // blender scene directory
  int width = 64;
  int height = 64;
  int n_train = 16;
  int n_val = 2;
  int n_test = 4;
  double camera_radius = 2.6;
  double camera_angle_x = 0.6911112;
  Vec3<double> aabb_min{-1.5, -1.5, -1.5};
  Vec3<double> aabb_max{1.5, 1.5, 1.5};
  int quadrature_n = 2048;

  void validate() const {
    if (source != "procedural" && source != "blender")
      throw ConfigError("data.source must be 'procedural' or 'blender'");
    if (source == "procedural") {
      (void)analytic_scene(scene);
      if (width < 1 || height < 1) throw ConfigError("data: width/height must be >= 1");
      if (n_train < 1) throw ConfigError("data: n_train must be >= 1");
      if (n_val < 0 || n_test < 0) throw ConfigError("data: n_val/n_test must be >= 0");
      if (quadrature_n < 1024) throw ConfigError("data: quadrature_n must be >= 1024");
      if (!(camera_radius > 0.0)) throw ConfigError("data: camera_radius must be positive");
      if (!(camera_angle_x > 0.0 && camera_angle_x < M_PI)) throw ConfigError("data: camera_angle_x out of range");
    }
    for (std::size_t i = 0; i < 3; ++i)
      if (!(aabb_max[i] > aabb_min[i])) throw ConfigError("data: degenerate aabb");
  }
};

// Posed views of one split. `targets` are RGB images already composited over
// the background; rays come out in normalized (unit-cube) coordinates.
struct Dataset {
  std::string split;
  std::vector<Camera> cameras;
  std::vector<Image> targets;
  SceneTransform transform;
  double near = 2.0;  // world units
  double far = 6.0;

  std::size_t size() const { return cameras.size(); }
  bool empty() const { return cameras.empty(); }

  Ray ray(std::size_t view, int u, int v, double jx, double jy) const {
    return transform.apply(generate_ray(cameras[view], u, v, jx, jy, near, far));
  }

  Vec3<double> target(std::size_t view, int u, int v) const {
    const auto& img = targets[view];
    return {img.at(u, v, 0), img.at(u, v, 1), img.at(u, v, 2)};
  }
};

// Views on a sphere around the origin, world up +z: golden-angle azimuths
// and elevations sweeping 10..60 degrees. `phase` in [0,1) offsets the
// sequence so splits do not share poses.
inline std::vector<Camera> orbit_cameras(int n, double radius, int width, int height, double camera_angle_x,
                                         double phase) {
  std::vector<Camera> cams;
  constexpr double golden = 2.399963229728653;  // pi * (3 - sqrt(5))
  for (int i = 0; i < n; ++i) {
    const double s = (static_cast<double>(i) + phase) / std::max(1, n);
    const double elev = (10.0 + 50.0 * s) * M_PI / 180.0;
    const double azim = golden * (static_cast<double>(i) + phase) + 0.7 * phase;
    const Vec3<double> eye{radius * std::cos(elev) * std::cos(azim), radius * std::cos(elev) * std::sin(azim),
                           radius * std::sin(elev)};
    cams.push_back(look_at(eye, {0.0, 0.0, 0.0}, {0.0, 0.0, 1.0}, width, height, camera_angle_x));
  }
  return cams;
}

inline int split_phase_index(const std::string& split) {
  if (split == "train") return 0;
  if (split == "val") return 1;
  if (split == "test") return 2;
  throw ConfigError("unknown split '" + split + "'");
}

inline Dataset make_procedural_dataset(const DataConfig& cfg, const std::string& split, double near, double far,
                                       const Vec3<double>& background) {
  const int which = split_phase_index(split);
  const int n = which == 0 ? cfg.n_train : which == 1 ? cfg.n_val : cfg.n_test;
  const double phase = which == 0 ? 0.0 : which == 1 ? 0.5 : 0.25;
  Dataset ds;
  ds.split = split;
  ds.near = near;
  ds.far = far;
  ds.cameras = orbit_cameras(n, cfg.camera_radius, cfg.width, cfg.height, cfg.camera_angle_x, phase);
  const AnalyticScene scene = analytic_scene(cfg.scene);
  for (const auto& cam : ds.cameras)
    ds.targets.push_back(render_analytic(scene, cam, near, far, cfg.quadrature_n, background));
  std::vector<Camera> anchor = ds.cameras.empty() ? std::vector<Camera>{Camera{}} : ds.cameras;
  ds.transform = normalize_scene(anchor, cfg.aabb_min, cfg.aabb_max);
  return ds;
}

// NeRF-synthetic layout: <path>/transforms_<split>.json and PNG frames.
inline Dataset load_blender_dataset(const DataConfig& cfg, const std::string& split, double near, double far,
                                    const Vec3<double>& background) {
  const auto file = std::filesystem::path(cfg.path) / ("transforms_" + split + ".json");
  TransformsFile tf = load_transforms(file.string());
  Dataset ds;
  ds.split = split;
  ds.near = near;
  ds.far = far;
  ds.cameras = tf.cameras;
  for (std::size_t i = 0; i < tf.image_paths.size(); ++i) {
    Image rgba = load_image(tf.image_paths[i]);
    if (rgba.width != ds.cameras[i].width || rgba.height != ds.cameras[i].height)
      throw ImageError("image '" + tf.image_paths[i] + "' does not match the declared camera size");
    ds.targets.push_back(composite_background(rgba, background));
  }
  std::vector<Camera> anchor = ds.cameras.empty() ? std::vector<Camera>{Camera{}} : ds.cameras;
  ds.transform = normalize_scene(anchor, cfg.aabb_min, cfg.aabb_max);
  return ds;
}

inline Dataset make_dataset(const DataConfig& cfg, const std::string& split, double near, double far,
                            const Vec3<double>& background) {
  cfg.validate();
  if (cfg.source == "procedural") return make_procedural_dataset(cfg, split, near, far, background);
  return load_blender_dataset(cfg, split, near, far, background);
}

struct RayTarget {
  std::uint32_t view = 0;
  int u = 0, v = 0;
  double jx = 0.5, jy = 0.5;
  Vec3<double> target{};
};

// Uniform i.i.d. pixel draws across every image of the split, with a
// uniform sub-pixel jitter per ray.
template <class Rng>
std::vector<RayTarget> sample_ray_batch(const Dataset& ds, int batch_rays, Rng& rng) {
  if (ds.empty()) throw ConfigError("sample_ray_batch: empty dataset");
  std::vector<std::uint64_t> offsets{0};
  for (const auto& img : ds.targets) offsets.push_back(offsets.back() + img.pixel_count());
  std::uniform_int_distribution<std::uint64_t> pick(0, offsets.back() - 1);
  std::uniform_real_distribution<double> jitter(0.0, 1.0);
  std::vector<RayTarget> batch(static_cast<std::size_t>(batch_rays));
  for (auto& rt : batch) {
    const std::uint64_t k = pick(rng);
    std::size_t view = 0;
    while (offsets[view + 1] <= k) ++view;
    const std::uint64_t local = k - offsets[view];
    const int w = ds.targets[view].width;
    rt.view = static_cast<std::uint32_t>(view);
    rt.u = static_cast<int>(local % static_cast<std::uint64_t>(w));
    rt.v = static_cast<int>(local / static_cast<std::uint64_t>(w));
    rt.jx = jitter(rng);
    rt.jy = jitter(rng);
    rt.target = ds.target(view, rt.u, rt.v);
  }
  return batch;
}

}  // namespace hybfield
