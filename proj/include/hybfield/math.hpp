// Copyright 2026 The hybfield Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>

namespace hybfield {

template <class S>
using Vec3 = std::array<S, 3>;

template <class S>
constexpr Vec3<S> operator+(const Vec3<S>& a, const Vec3<S>& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}

template <class S>
constexpr Vec3<S> operator-(const Vec3<S>& a, const Vec3<S>& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}

template <class S>
constexpr Vec3<S> operator*(S s, const Vec3<S>& a) {
  return {s * a[0], s * a[1], s * a[2]};
}

template <class S>
constexpr S dot(const Vec3<S>& a, const Vec3<S>& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

template <class S>
S norm(const Vec3<S>& a) {
  return std::sqrt(dot(a, a));
}

template <class S>
Vec3<S> normalized(const Vec3<S>& a) {
  const S n = norm(a);
  return {a[0] / n, a[1] / n, a[2] / n};
}

template <class To, class From>
Vec3<To> vec_cast(const Vec3<From>& v) {
  return {static_cast<To>(v[0]), static_cast<To>(v[1]), static_cast<To>(v[2])};
}

inline bool all_finite(const Vec3<double>& v) {
  return std::isfinite(v[0]) && std::isfinite(v[1]) && std::isfinite(v[2]);
}

// Row-major 3x3 and 4x4 matrices.
using Mat3 = std::array<std::array<double, 3>, 3>;
using Mat4 = std::array<std::array<double, 4>, 4>;

inline Mat4 identity4() {
  Mat4 m{};
  for (int i = 0; i < 4; ++i) m[i][i] = 1.0;
  return m;
}

inline Vec3<double> mat_vec(const Mat3& m, const Vec3<double>& v) {
  return {m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
          m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
          m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2]};
}

inline Mat3 rotation_of(const Mat4& m) {
  Mat3 r{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r[i][j] = m[i][j];
  return r;
}

inline Vec3<double> translation_of(const Mat4& m) { return {m[0][3], m[1][3], m[2][3]}; }

inline double det3(const Mat3& m) {
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
         m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

// Dense y = W x + b, W row-major (out x in).
template <class S>
inline void affine(std::span<const S> weight, std::span<const S> bias, std::span<const S> in,
                   std::span<S> out) {
  const std::size_t n_in = in.size();
  for (std::size_t o = 0; o < out.size(); ++o) {
    const S* row = weight.data() + o * n_in;
    S acc = S(0);
#pragma omp simd reduction(+ : acc)
    for (std::size_t i = 0; i < n_in; ++i) acc += row[i] * in[i];
    out[o] = bias[o] + acc;
  }
}

}  // namespace hybfield
