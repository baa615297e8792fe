// Copyright 2026 The hybfield Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <span>
#include <stdexcept>

#include "hybfield/math.hpp"

namespace hybfield {

inline constexpr int kShDim = 16;

// Real spherical harmonics through degree 3, Condon-Shortley phase, ordered by
// band and then m = -l..l.
template <class S>
void sh_encode_into(const Vec3<S>& d, std::span<S> out) {
  const S x = d[0], y = d[1], z = d[2];
  const S xx = x * x, yy = y * y, zz = z * z;
  out[0] = S(0.28209479177387814);
  out[1] = S(-0.48860251190291992) * y;
  out[2] = S(0.48860251190291992) * z;
  out[3] = S(-0.48860251190291992) * x;
  out[4] = S(1.0925484305920792) * x * y;
  out[5] = S(-1.0925484305920792) * y * z;
  out[6] = S(0.94617469575756008) * zz - S(0.31539156525252005);
  out[7] = S(-1.0925484305920792) * x * z;
  out[8] = S(0.54627421529603959) * (xx - yy);
  out[9] = S(0.59004358992664352) * y * (S(-3) * xx + yy);
  out[10] = S(2.8906114426405538) * x * y * z;
  out[11] = S(0.45704579946446572) * y * (S(1) - S(5) * zz);
  out[12] = S(0.37317633259011546) * z * (S(5) * zz - S(3));
  out[13] = S(0.45704579946446572) * x * (S(1) - S(5) * zz);
  out[14] = S(1.4453057213202769) * z * (xx - yy);
  out[15] = S(0.59004358992664352) * x * (-xx + S(3) * yy);
}

template <class S>
std::array<S, kShDim> sh_encode(const Vec3<S>& d) {
  const double n = std::sqrt(static_cast<double>(dot(d, d)));
  if (!(std::abs(n - 1.0) <= 1e-6)) throw std::invalid_argument("sh_encode: direction is not unit length");
  std::array<S, kShDim> out{};
  sh_encode_into(d, std::span<S>(out));
  return out;
}

}  // namespace hybfield
