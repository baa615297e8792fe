// Copyright 2026 The hybfield Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

#include "hybfield/math.hpp"

namespace hybfield {

// Gaussian approximation of one conical frustum of a pixel cone.
//
// `cov_triu` stores the row-major upper triangle
// [S00, S01, S02, S11, S12, S22] of the 3x3 covariance.
struct GaussianFrustum {
  Vec3<double> mean{};
  std::array<double, 6> cov_triu{};
  double sigma_t2 = 0.0;
  double sigma_r2 = 0.0;

  Mat3 covariance() const {
    const auto& c = cov_triu;
    return {{{c[0], c[1], c[2]}, {c[1], c[3], c[4]}, {c[2], c[4], c[5]}}};
  }
};

// Sigma = sigma_t2 * d d^T + sigma_r2 * (I - d d^T / |d|^2).
inline std::array<double, 6> frustum_covariance_triu(const Vec3<double>& d, double sigma_t2, double sigma_r2) {
  const double dd = dot(d, d);
  if (!(dd > 0.0)) throw std::invalid_argument("frustum covariance: zero direction");
  std::array<double, 6> out{};
  int k = 0;
  for (int i = 0; i < 3; ++i) {
    for (int j = i; j < 3; ++j) {
      const double outer = d[static_cast<std::size_t>(i)] * d[static_cast<std::size_t>(j)];
      const double eye = i == j ? 1.0 : 0.0;
      out[static_cast<std::size_t>(k++)] = sigma_t2 * outer + sigma_r2 * (eye - outer / dd);
    }
  }
  return out;
}

// Conical frustum between t0 and t1 along o + t d, whose cross-section radius
// grows as radius * t, approximated by a Gaussian with matched moments.
inline GaussianFrustum cone_covariance(const Vec3<double>& origin, const Vec3<double>& direction, double t0,
                                       double t1, double radius) {
  if (!(t1 > t0)) throw std::invalid_argument("cone_covariance: degenerate segment (t1 <= t0)");
  if (t0 < 0.0) throw std::invalid_argument("cone_covariance: negative segment start");
  const double dn = norm(direction);
  if (!(dn > 0.0)) throw std::invalid_argument("cone_covariance: zero direction");
  if (std::abs(dn - 1.0) > 1e-9) throw std::invalid_argument("cone_covariance: direction is not unit length");
  if (!(radius > 0.0)) throw std::invalid_argument("cone_covariance: footprint radius must be positive");

  // Stable reparameterization around the segment midpoint and half-width.
  const double mid = 0.5 * (t0 + t1);
  const double half = 0.5 * (t1 - t0);
  const double mid2 = mid * mid;
  const double half2 = half * half;
  const double denom = 3.0 * mid2 + half2;
  const double mu_t = mid + 2.0 * mid * half2 / denom;
  const double var_t = half2 / 3.0 - (4.0 / 15.0) * (half2 * half2 * (12.0 * mid2 - half2)) / (denom * denom);
  const double var_r =
      radius * radius * (mid2 / 4.0 + (5.0 / 12.0) * half2 - (4.0 / 15.0) * (half2 * half2) / denom);

  GaussianFrustum g;
  g.mean = origin + mu_t * direction;
  g.sigma_t2 = std::max(var_t, 0.0);
  g.sigma_r2 = std::max(var_r, 0.0);
  g.cov_triu = frustum_covariance_triu(direction, g.sigma_t2, g.sigma_r2);
  return g;
}

// f(x) = triu(Sigma), row-major.
inline std::array<double, 6> triu_flatten(const GaussianFrustum& frustum) { return frustum.cov_triu; }

}  // namespace hybfield
