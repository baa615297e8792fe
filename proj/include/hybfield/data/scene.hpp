// Copyright 2026 The hybfield Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hybfield/data/camera.hpp"
#include "hybfield/data/image.hpp"
#include "hybfield/errors.hpp"
#include "hybfield/math.hpp"
#include "hybfield/render/composite.hpp"
#include "hybfield/render/ray.hpp"

namespace hybfield {

// Uniform scale + translation, p' = scale * p + offset.
struct SceneTransform {
  double scale = 1.0;
  Vec3<double> offset{};

  Vec3<double> apply(const Vec3<double>& p) const { return scale * p + offset; }
  Vec3<double> inverse(const Vec3<double>& p) const { return (1.0 / scale) * (p - offset); }

  Ray apply(const Ray& r) const {
    Ray out = r;
    out.origin = apply(r.origin);
    out.direction = normalized(r.direction);
    out.near = r.near * scale;
    out.far = r.far * scale;
    return out;  // the footprint radius is per unit distance, so it is scale-free
  }
};

// Maps the world box [lo, hi] into [margin, 1 - margin]^3, centered.
inline SceneTransform normalize_scene(const std::vector<Camera>& cameras, const Vec3<double>& lo,
                                      const Vec3<double>& hi, double margin = 0.05) {
  if (cameras.empty()) throw std::invalid_argument("normalize_scene: no cameras");
  double extent = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double e = hi[i] - lo[i];
    if (!(e > 0.0) || !std::isfinite(e)) throw std::invalid_argument("normalize_scene: degenerate bounding box");
    extent = std::max(extent, e);
  }
  SceneTransform t;
  t.scale = (1.0 - 2.0 * margin) / extent;
  const Vec3<double> center = 0.5 * (lo + hi);
  t.offset = Vec3<double>{0.5, 0.5, 0.5} - t.scale * center;
  return t;
}

// Closed-form density and color fields in world coordinates.
struct AnalyticScene {
  std::string name;
  std::function<double(const Vec3<double>&)> density;
  std::function<Vec3<double>(const Vec3<double>&)> color;
};

namespace scenes {

inline double soft_step(double x) { return 0.5 * (1.0 + std::tanh(x)); }

// Emissive ball of radius 0.8 with a smooth density edge and a colored
// gradient plus a band pattern on its surface.
inline AnalyticScene soft_sphere() {
  constexpr double radius = 0.8, edge = 0.04, peak = 40.0;
  AnalyticScene s;
  s.name = "soft_sphere";
  s.density = [=](const Vec3<double>& p) { return peak * soft_step((radius - norm(p)) / edge); };
  s.color = [=](const Vec3<double>& p) {
    const double band = 0.5 + 0.5 * std::sin(6.0 * p[2]);
    return Vec3<double>{std::clamp(0.55 + 0.4 * p[0] / radius, 0.0, 1.0),
                        std::clamp(0.35 + 0.4 * band, 0.0, 1.0),
                        std::clamp(0.55 - 0.4 * p[1] / radius, 0.0, 1.0)};
  };
  return s;
}

// Two overlapping Gaussian blobs of different colors.
inline AnalyticScene two_blob() {
  AnalyticScene s;
  s.name = "two_blob";
  const Vec3<double> a{-0.35, 0.0, 0.1}, b{0.4, 0.1, -0.1};
  s.density = [=](const Vec3<double>& p) {
    const Vec3<double> da = p - a, db = p - b;
    return 30.0 * std::exp(-dot(da, da) / (2.0 * 0.25 * 0.25)) + 20.0 * std::exp(-dot(db, db) / (2.0 * 0.3 * 0.3));
  };
  s.color = [=](const Vec3<double>& p) {
    const Vec3<double> da = p - a, db = p - b;
    const double wa = std::exp(-dot(da, da) / (2.0 * 0.25 * 0.25));
    const double wb = std::exp(-dot(db, db) / (2.0 * 0.3 * 0.3));
    const double t = wa / (wa + wb + 1e-12);
    return Vec3<double>{0.9 * t + 0.1 * (1 - t), 0.3, 0.2 * t + 0.8 * (1 - t)};
  };
  return s;
}

// Effectively opaque ball of constant color.
inline AnalyticScene hard_sphere() {
  AnalyticScene s;
  s.name = "hard_sphere";
  s.density = [](const Vec3<double>& p) { return norm(p) < 0.8 ? 1e6 : 0.0; };
  s.color = [](const Vec3<double>&) { return Vec3<double>{0.2, 0.7, 0.4}; };
  return s;
}

inline AnalyticScene empty() {
  AnalyticScene s;
  s.name = "empty";
  s.density = [](const Vec3<double>&) { return 0.0; };
  s.color = [](const Vec3<double>&) { return Vec3<double>{0.0, 0.0, 0.0}; };
  return s;
}

}  // namespace scenes

inline AnalyticScene analytic_scene(const std::string& name) {
  if (name == "soft_sphere") return scenes::soft_sphere();
  if (name == "two_blob") return scenes::two_blob();
  if (name == "hard_sphere") return scenes::hard_sphere();
  if (name == "empty") return scenes::empty();
  throw ConfigError("unknown procedural scene '" + name + "'");
}

// Midpoint quadrature of the transport integral along one world-space ray.
inline Vec3<double> integrate_analytic(const AnalyticScene& scene, const Ray& ray, int quadrature_n,
                                       const Vec3<double>& background, double* opacity = nullptr) {
  const double dt = (ray.far - ray.near) / quadrature_n;
  double T = 1.0;
  Vec3<double> c{};
  for (int i = 0; i < quadrature_n; ++i) {
    const double t = ray.near + (i + 0.5) * dt;
    const Vec3<double> p = ray.origin + t * ray.direction;
    const double sigma = scene.density(p);
    if (sigma <= 0.0) continue;
    const double next = T * std::exp(-sigma * dt);
    const Vec3<double> col = scene.color(p);
    for (std::size_t k = 0; k < 3; ++k) c[k] += (T - next) * col[k];
    T = next;
    if (T == 0.0) break;
  }
  if (opacity) *opacity = 1.0 - T;
  return c + T * background;
}

// Ground-truth RGB image of an analytic scene composited over `background`,
// one ray through each pixel center.
inline Image render_analytic(const AnalyticScene& scene, const Camera& camera, double near, double far,
                             int quadrature_n, const Vec3<double>& background) {
  if (quadrature_n < 1) throw std::invalid_argument("render_analytic: quadrature_n must be >= 1");
  Image img(camera.width, camera.height, 3);
  for (int v = 0; v < camera.height; ++v) {
    for (int u = 0; u < camera.width; ++u) {
      const Ray r = generate_ray(camera, u, v, 0.5, 0.5, near, far);
      const Vec3<double> c = integrate_analytic(scene, r, quadrature_n, background);
      for (int k = 0; k < 3; ++k) img.at(u, v, k) = static_cast<float>(c[static_cast<std::size_t>(k)]);
    }
  }
  return img;
}

}  // namespace hybfield
