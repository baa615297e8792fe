// Copyright 2026 The hybfield Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "hybfield/data/camera.hpp"
#include "hybfield/encoding/cone.hpp"
#include "hybfield/math.hpp"

namespace hybfield {

struct Ray {
  Vec3<double> origin{};
  Vec3<double> direction{0.0, 0.0, -1.0};
  double footprint_radius = 1.0;  // cone radius per unit distance
  double near = 0.0;
  double far = 1.0;
};

// Pixel footprint radius per unit distance for focal length fx: the radius
// of a disk with the same variance as a unit-pixel square, 2/sqrt(12) / fx.
inline double pixel_footprint_radius(double fx) { return (2.0 / std::sqrt(12.0)) / fx; }

// Ray through pixel (u, v) + jitter of `camera`.
inline Ray generate_ray(const Camera& camera, int u, int v, double jitter_x, double jitter_y, double near,
                        double far) {
  if (u < 0 || v < 0 || u >= camera.width || v >= camera.height)
    throw std::out_of_range("generate_ray: pixel outside image");
  const Vec3<double> local{(u + jitter_x - camera.cx) / camera.fx, -(v + jitter_y - camera.cy) / camera.fy, -1.0};
  Ray r;
  r.direction = normalized(mat_vec(rotation_of(camera.c2w), local));
  r.origin = translation_of(camera.c2w);
  r.footprint_radius = pixel_footprint_radius(camera.fx);
  r.near = near;
  r.far = far;
  return r;
}

// Stratified samples along one ray. Segment k is the stratum
// [near + k*delta, near + (k+1)*delta]; the sample position lies inside it.
struct RaySamples {
  std::vector<double> edges;     // N + 1 stratum boundaries
  std::vector<double> t;         // N sample positions
  std::vector<double> delta;     // N segment lengths
  std::vector<GaussianFrustum> frustums;

  std::size_t size() const { return t.size(); }
};

// With `rng == nullptr` every sample sits at its stratum midpoint.
template <class Rng = std::mt19937_64>
RaySamples stratified_samples(const Ray& ray, int n_samples, Rng* rng) {
  if (n_samples < 1) throw std::invalid_argument("stratified_samples: n_samples must be >= 1");
  RaySamples s;
  const auto n = static_cast<std::size_t>(n_samples);
  s.edges.resize(n + 1);
  s.t.resize(n);
  s.delta.resize(n);
  s.frustums.resize(n);
  const double span = ray.far - ray.near;
  for (std::size_t k = 0; k <= n; ++k) s.edges[k] = ray.near + span * static_cast<double>(k) / static_cast<double>(n);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double u = rng ? unif(*rng) : 0.5;
    s.t[k] = ray.near + span * (static_cast<double>(k) + u) / static_cast<double>(n);
    s.delta[k] = s.edges[k + 1] - s.edges[k];
    s.frustums[k] = cone_covariance(ray.origin, ray.direction, s.edges[k], s.edges[k + 1], ray.footprint_radius);
  }
  return s;
}

}  // namespace hybfield
