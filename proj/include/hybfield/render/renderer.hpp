// Copyright 2026 The hybfield Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <random>
#include <stdexcept>
#include <vector>

#include "hybfield/data/dataset.hpp"
#include "hybfield/model.hpp"
#include "hybfield/parallel.hpp"

namespace hybfield {

struct RenderConfig {
  int n_samples = 128;
  Vec3<double> background{1.0, 1.0, 1.0};
  double near = 2.0;
  double far = 6.0;
  bool eval_deterministic = true;

  void validate() const {
    if (n_samples < 1) throw std::invalid_argument("render: n_samples must be >= 1");
    if (!(near >= 0.0) || !(far > near)) throw std::invalid_argument("render: need far > near >= 0");
    for (double c : background)
      if (!(c >= 0.0 && c <= 1.0)) throw std::invalid_argument("render: background_color must lie in [0,1]");
  }
};

// Renders one view of `ds` through pixel centers. Deterministic settings use
// midpoint samples; otherwise strata are jittered from `seed` per row.
template <class S>
Image render_view(const FieldParams<S>& params, const Dataset& ds, std::size_t view, const RenderConfig& rc,
                  int threads = 1, std::uint64_t seed = 0) {
  const Camera& cam = ds.cameras.at(view);
  Image img(cam.width, cam.height, 3);
  const Vec3<S> bg = vec_cast<S>(rc.background);
  parallel_ranges(static_cast<std::size_t>(cam.height), threads, [&](int, std::size_t begin, std::size_t end) {
    RayWorkspace<S> ws(params, rc.n_samples);
    for (std::size_t v = begin; v < end; ++v) {
      std::mt19937_64 rng(seed + v);
      for (int u = 0; u < cam.width; ++u) {
        const Ray ray = ds.ray(view, u, static_cast<int>(v), 0.5, 0.5);
        const RaySamples samples =
            stratified_samples(ray, rc.n_samples, rc.eval_deterministic ? nullptr : &rng);
        const Vec3<S> c = render_ray<S>(params, ray, samples, bg, ws);
        for (int k = 0; k < 3; ++k) img.at(u, static_cast<int>(v), k) = static_cast<float>(c[static_cast<std::size_t>(k)]);
      }
    }
  });
  return img;
}

}  // namespace hybfield
