# Copyright 2026 The hybfield Authors.
# SPDX-License-Identifier: Apache-2.0
"""Reference values frozen into the unit tests.

Each block is computed without the C++ code: mpmath for closed forms and
integrals, plain Python integers for hashing, scipy/skimage for statistics and
image metrics. Re-run to audit a constant; the tests never call this script.
"""
import math

import mpmath as mp
import numpy as np
from scipy import stats

mp.mp.dps = 40


def level_resolutions(n_min, n_max, levels):
    b = mp.exp((mp.log(n_max) - mp.log(n_min)) / (levels - 1))
    return [int(mp.floor(n_min * b**l + mp.mpf("1e-30"))) for l in range(levels)]


def spatial_hash(cell, table_size):
    primes = (1, 2654435761, 805459861)
    h = 0
    for c, p in zip(cell, primes):
        h ^= (c * p) & 0xFFFFFFFF
    return h & (table_size - 1)


def frustum_moments(t0, t1, radius):
    # Uniform density over the cone segment: cross-section area grows as t^2.
    w = mp.quad(lambda t: t**2, [t0, t1])
    mean = mp.quad(lambda t: t**3, [t0, t1]) / w
    second = mp.quad(lambda t: t**4, [t0, t1]) / w
    var_t = second - mean**2
    # A disk of radius R has per-axis variance R^2 / 4.
    var_r = radius**2 * second / 4
    return mean, var_t, var_r


def real_sh(l, m, d):
    x, y, z = (mp.mpf(v) for v in d)
    theta = mp.acos(z)
    phi = mp.atan2(y, x)
    y_abs = mp.spherharm(l, abs(m), theta, phi)
    if m == 0:
        return mp.re(y_abs)
    if m > 0:
        return mp.sqrt(2) * mp.re(y_abs)
    return mp.sqrt(2) * mp.im(y_abs)


def pattern(w, h, seed):
    ys, xs = np.mgrid[0:h, 0:w]
    v = 0.5 + 0.25 * np.sin(0.37 * xs + 0.11 * seed) + 0.2 * np.cos(0.23 * ys * (1 + 0.1 * seed) + 0.05 * xs)
    return np.clip(v, 0.0, 1.0).astype(np.float32).astype(np.float64)


def main():
    print("levels 16->512 L=16:", level_resolutions(16, 512, 16))
    print("levels 180->2048 L=8:", level_resolutions(180, 2048, 8))
    print("levels 16->2048 L=16:", level_resolutions(16, 2048, 16))

    cells = [(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1), (7, 13, 29), (1000, 2000, 3000), (2047, 2047, 2047)]
    for c in cells:
        print("hash", c, spatial_hash(c, 1 << 19))
    t = 1 << 19
    counts = np.zeros(t, dtype=np.int64)
    for i in range(100):
        for j in range(100):
            for k in range(100):
                counts[spatial_hash((i, j, k), t)] += 1
    n = 100**3
    expected = n / t
    chi2 = float(((counts - expected) ** 2 / expected).sum())
    print("chi2 100^3 cells T=2^19:", repr(chi2))
    print("chi2 band 99.9%:", repr(stats.chi2.ppf(0.0005, t - 1)), repr(stats.chi2.ppf(0.9995, t - 1)))
    print("chi2 band df=15:", repr(stats.chi2.ppf(0.0005, 15)), repr(stats.chi2.ppf(0.9995, 15)))

    for t0, t1, r in [(2.0, 2.5, 0.01), (0.1, 0.3, 0.5), (3.9, 4.0, 0.002)]:
        mean, vt, vr = frustum_moments(mp.mpf(t0), mp.mpf(t1), mp.mpf(r))
        print("frustum", (t0, t1, r), mp.nstr(mean, 20), mp.nstr(vt, 20), mp.nstr(vr, 20))

    for d in [(0.0, 0.0, 1.0), (0.48, -0.6, 0.64)]:
        vals = [real_sh(l, m, d) for l in range(4) for m in range(-l, l + 1)]
        print("sh", d, [mp.nstr(v, 17) for v in vals])

    fx = 0.5 * 800 / mp.tan(0.5 * mp.mpf("0.6911112"))
    print("fx:", mp.nstr(fx, 17))

    c1 = (0.01) ** 2
    print("ssim 0 vs 1:", repr(c1 / (1 + c1)))
    from skimage.metrics import structural_similarity

    a = pattern(32, 24, 1)
    b = pattern(32, 24, 2)
    s = structural_similarity(a, b, gaussian_weights=True, sigma=1.5, use_sample_covariance=False, data_range=1.0)
    print("ssim pattern(1) vs pattern(2):", repr(float(s)))
    print("psnr pattern(1) vs pattern(2):", repr(float(-10 * np.log10(np.mean((a - b) ** 2)))))

    print("atanh(0.5):", repr(math.atanh(0.5)))
    print("sigma at raw -15:", repr(math.exp(-15)))
    print("init bound sqrt(6/64):", repr(math.sqrt(6 / 64)))


if __name__ == "__main__":
    main()
