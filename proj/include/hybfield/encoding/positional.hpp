// Copyright 2026 The hybfield Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <type_traits>
#include <vector>

namespace hybfield {

// Output width of the fixed sinusoidal encoding of an n-vector.
constexpr int fixed_pe_dim(int n, int n_freqs) { return 2 * n_freqs * n; }

// Layout is frequency-major, then sin before cos, then component:
// [sin(v), cos(v), sin(2v), cos(2v), ..., sin(2^{L-1} v), cos(2^{L-1} v)].
// The checkpoint format and the weight network both depend on this order.
//
// Higher octaves come from the double-angle identities evaluated in double
// (at least), one sin/cos pair per component; the drift after k doublings is
// about 2^k ulp of double, far below float resolution.
template <class S>
void fixed_pe_into(std::span<const S> v, int n_freqs, std::span<S> out) {
  using W = std::conditional_t<(sizeof(S) > sizeof(double)), S, double>;
  const std::size_t n = v.size();
  for (std::size_t i = 0; i < n; ++i) {
    W s = std::sin(static_cast<W>(v[i]));
    W c = std::cos(static_cast<W>(v[i]));
    for (int f = 0; f < n_freqs; ++f) {
      S* sin_block = out.data() + static_cast<std::size_t>(2 * f) * n;
      sin_block[i] = static_cast<S>(s);
      sin_block[n + i] = static_cast<S>(c);
      const W s2 = 2 * s * c;
      c = (c - s) * (c + s);
      s = s2;
    }
  }
}

template <class S>
std::vector<S> fixed_pe(std::span<const S> v, int n_freqs) {
  if (n_freqs < 1) throw std::invalid_argument("fixed_pe: n_freqs must be >= 1");
  for (S x : v)
    if (!std::isfinite(static_cast<double>(x))) throw std::invalid_argument("fixed_pe: non-finite input");
  std::vector<S> out(static_cast<std::size_t>(fixed_pe_dim(static_cast<int>(v.size()), n_freqs)));
  fixed_pe_into(v, n_freqs, std::span<S>(out));
  return out;
}

}  // namespace hybfield
