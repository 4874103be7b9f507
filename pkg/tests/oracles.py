"""Slow, independent reference implementations used only by the tests."""

from functools import lru_cache
from itertools import product
from math import lgamma, pi, sqrt
import warnings

import numpy as np
from scipy import integrate, special

from toral_relax.noise import _bump_const, _power_law_const


def wedge_py(k, m):
    d = len(k) // 2
    return sum(k[d + i] * m[i] - k[i] * m[d + i] for i in range(d))


def matvec_py(F, k):
    return tuple(sum(int(a) * int(b) for a, b in zip(row, k)) for row in F)


def matpow_py(F, n):
    dim = len(F)
    out = [[int(i == j) for j in range(dim)] for i in range(dim)]
    for _ in range(n):
        out = [[sum(out[i][l] * int(F[l][j]) for l in range(dim)) for j in range(dim)] for i in range(dim)]
    return out


def fold_py(k, N):
    out = []
    for x in k:
        r = x % N
        out.append(r - N if 2 * r > N else r)
    return tuple(out)


def box(R, dim=2):
    for k in product(range(-R, R + 1), repeat=dim):
        if any(k):
            yield k


def min_extension_brute(F, n, R, variant="endpoint"):
    """Exhaustive minimum over the box |k|_inf <= R in Python integers."""
    mats = [matpow_py(F, 0), matpow_py(F, n)] if variant == "endpoint" else [matpow_py(F, l) for l in range(n + 1)]
    best = None
    for k in box(R, len(F)):
        v = sum(sum(x * x for x in matvec_py(M, k)) for M in mats)
        best = v if best is None else min(best, v)
    return best


def theta_sum(sigma, xi, terms=200):
    return sum(np.exp(-sigma * sigma * (xi + nu) ** 2) for nu in range(-terms, terms + 1))


def gamma_lattice_sum(kernel, eps, N, k, R=None):
    """Direct sum over the noise lattice: sum_n g(n/s) cos(2 pi k^n / N) / sum_n g(n/s)."""
    s = eps * N
    if R is None:
        R = int(np.ceil(8 * s)) + 2 if kernel.is_gaussian else int(np.ceil(kernel.radius * s)) + 1
    ax = np.arange(-R, R + 1)
    pts = np.stack(np.meshgrid(ax, ax, indexing="ij"), -1).reshape(-1, 2)
    w = kernel.density(pts / s)
    ph = np.cos(2 * np.pi * ((k[1] * pts[:, 0] - k[0] * pts[:, 1]) % N) / N)
    return float((w * ph).sum() / w.sum())


def quantum_noisy_norm_brute(F, table, N, n, coarse=False):
    """max over nonzero k in (Z/N)^2 of the product formula, by plain loops."""
    best = 0.0
    for k in product(range(N), repeat=2):
        if not any(k):
            continue
        if coarse:
            kn = matvec_py(matpow_py(F, n), k)
            val = abs(table[k]) * abs(table[kn[0] % N, kn[1] % N])
        else:
            val, cur = 1.0, k
            for _ in range(n):
                cur = tuple(x % N for x in matvec_py(F, cur))
                val *= abs(table[cur])
        best = max(best, val)
    return best


def classical_gauss_norm_brute(F, eps, n, R, coarse=False):
    """Gaussian classical norms over a box, by plain loops (exact exponents)."""
    if coarse:
        v = min_extension_brute(F, n, R, "endpoint")
    else:
        mats = [matpow_py(F, l) for l in range(1, n + 1)]
        v = min(sum(sum(x * x for x in matvec_py(M, k)) for M in mats) for k in box(R, len(F)))
    return float(np.exp(-eps * eps * v))


def first_below_scan(values, threshold=np.exp(-1)):
    for n, v in enumerate(values):
        if n >= 1 and v < threshold:
            return n
    return None


def gaussian_residue_weights(eps, N, R=None):
    """Probability of each residue class n mod N under the sampled Gaussian noise."""
    s = eps * N
    R = R or int(np.ceil(10 * s)) + N
    ax = np.arange(-R, R + 1)
    q, p = np.meshgrid(ax, ax, indexing="ij")
    w = np.exp(-(np.pi / s) ** 2 * (q * q + p * p))
    out = np.zeros((N, N))
    np.add.at(out, (q % N, p % N), w)
    return out / out.sum()


@lru_cache(maxsize=4096)
def radial_ft_quad(kernel, rho):
    """Adaptive-quadrature Hankel transform of the non-Gaussian kernels."""
    if rho == 0.0:
        return 1.0
    d = kernel.dim_d
    if kernel.family == "power_law":
        # (1+r)^-a as a Laplace mixture of exp(-t r), whose transform is closed form
        a = 2 * pi * rho
        tail = kernel.tail
        log_pref = (
            np.log(_power_law_const(d, tail))
            + np.log(2 * pi)
            + (d - 1) * np.log(4 * pi)
            + np.log(2.0)
            + lgamma(d + 0.5)
            - 0.5 * np.log(pi)
            - lgamma(tail)
        )

        def integrand(t):
            return np.exp(tail * np.log(t) - t - (d + 0.5) * np.log(t * t + a * a) + log_pref)

        peak = max(tail, 1.0)
        cut = peak + 60.0 + 10 * sqrt(tail)
        parts = [(0.0, peak), (peak, cut), (cut, np.inf)]
        return float(sum(integrate.quad(integrand, lo, hi, epsabs=0, epsrel=1e-13, limit=400)[0] for lo, hi in parts))
    c = _bump_const(d, kernel.radius)
    R = kernel.radius
    w = 2 * pi * rho

    def integrand(s):
        u = s / R
        return np.exp(-1.0 / (1.0 - u * u)) * special.jv(d - 1, w * s) * s**d

    edges = np.linspace(0.0, R, max(1, int(w * R / pi) + 1) + 1)
    total = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for lo, hi in zip(edges[:-1], edges[1:]):
            total += integrate.quad(integrand, lo, hi, epsabs=1e-300, epsrel=1e-12, limit=200)[0]
    return float(2 * pi * c * rho ** (1 - d) * total)
