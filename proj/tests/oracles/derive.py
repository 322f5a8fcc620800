"""Independent reference values for the C++ unit tests.

Run: python3 tests/oracles/derive.py
Uses numpy/scipy only; shares no code with the C++ library.
"""
import math

import numpy as np
from scipy import stats


def h(et, z):
    return (1 + et * (1 - z)) ** 2 * z


def h_roots_numeric(et):
    # h(z) - 1 as a cubic in z, solved by numpy.roots
    # (1 + et - et z)^2 z - 1 = et^2 z^3 - 2 et (1+et) z^2 + (1+et)^2 z - 1
    r = np.roots([et * et, -2 * et * (1 + et), (1 + et) ** 2, -1.0])
    return sorted(float(x.real) for x in r if abs(x.imag) < 1e-12)


def thresholds(delta):
    weak = (1 + 1 / delta) * (math.sqrt(1 + delta) - 1)
    strong = (1 / delta) * ((1 - delta) ** -0.5 - 1)
    return weak, strong


def noise_norm_family_failure(d=64, sigma_p=0.1, vectors=18):
    # |xi|^2 / sigma_p^2 ~ chi^2_{d-2}; band [d/2, 3d/2]
    dof = d - 2
    p_vec = stats.chi2.cdf(d / 2, dof) + stats.chi2.sf(1.5 * d, dof)
    return p_vec, 1 - (1 - p_vec) ** vectors


def init_xi_family_failure(d=64, n=16, m=8, sigma_p=0.1, p=0.01, reps=20000, seed=7):
    # min over (i, j) of max_r j<w_{j,r}, xi_i> below sigma_0 sigma_p sqrt(d) / 4,
    # or max above 2 sqrt(log(16 m n / p)) sigma_0 sigma_p sqrt(d); <w, xi> ~ N(0, (sigma_0 |xi|)^2)
    rng = np.random.default_rng(seed)
    sigma_0 = 1 / (max(2.0, 0.4, sigma_p * math.sqrt(d)) * math.sqrt(d))
    scale = sigma_0 * sigma_p * math.sqrt(d)
    lo, hi = scale / 4, 2 * math.sqrt(math.log(16 * m * n / p)) * scale
    norms = sigma_p * np.sqrt(rng.chisquare(d - 2, size=(reps, n)))
    z = rng.standard_normal(size=(reps, n, 2, m)) * sigma_0 * norms[:, :, None, None]
    mx = z.max(axis=3)
    fail = (mx.min(axis=(1, 2)) < lo) | (mx.max(axis=(1, 2)) > hi)
    return fail.mean()


if __name__ == "__main__":
    for et in (0.5, 0.8):
        print(f"h roots eta~={et}:", [f"{z:.6f}" for z in h_roots_numeric(et)])
    for et in (0.3, 0.45, 0.49):
        print(f"h roots eta~={et} (z2 > 1 expected):", [f"{z:.6f}" for z in h_roots_numeric(et)])
    print("thresholds(0.5): weak %.6f strong %.6f" % thresholds(0.5))
    print("thresholds(1e-6): weak %.6f" % thresholds(1e-6)[0])
    print("E|xi|^2 at d=64 sigma_p=0.1:", 0.01 * 62)
    pv, pf = noise_norm_family_failure()
    print(f"noise_norm per-vector {pv:.5f}, per-dataset (18 vectors) {pf:.4f}")
    print(f"init_xi per-dataset failure {init_xi_family_failure():.4f}")
    print("binom 99.9% quantile n=100 p=0.01:", int(stats.binom.ppf(0.999, 100, 0.01)))
    for q, pf_ in (("noise_norm", pf), ("init_xi", init_xi_family_failure())):
        print(q, "99.9% interval of failures in 100 seeds:",
              int(stats.binom.ppf(0.0005, 100, pf_)), int(stats.binom.ppf(0.9995, 100, pf_)))
