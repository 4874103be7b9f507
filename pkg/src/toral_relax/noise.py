"""Noise kernels and their classical and quantum eigenvalues.

A kernel is a probability density g on R^{2d}.  Classically, convolution by
g_eps(x) = eps^{-2d} g(x/eps) multiplies the mode w_k by ghat(eps k).  On the
quantum torus with N states per dimension, the quantised noise multiplies the
Weyl mode W_k by

    gamma(k) = sum_n g_s(n) exp(-2 pi i k^n / N) / sum_n g_s(n),   s = eps N.

The Gaussian family is normalised so that ghat(xi) = exp(-|xi|^2), i.e.
g(x) = pi^d exp(-pi^2 |x|^2).  Its quantum eigenvalues are products of
Jacobi theta ratios theta_s(k_j/N) / theta_s(0), where

    theta_s(xi) = sum_nu exp(-s^2 (xi + nu)^2).

Everything that can underflow is computed as a logarithm.
"""

from dataclasses import dataclass
from functools import lru_cache
from math import gamma as gamma_fn
from math import lgamma, pi, sqrt

import numpy as np
from scipy import integrate, special

from .lattice import fold

FAMILIES = ("gaussian", "compact_bump", "power_law")
SQRT_PI = sqrt(pi)
# exp(-x) underflows to 0 for x above this
_UNDERFLOW = 745.0
# lattice points used for the direct sum of heavy-tailed kernels
_DIRECT_SUM_BUDGET = 4_000_000


@dataclass(frozen=True)
class NoiseKernel:
    """Radial noise density g on R^{2d}.

    ``radius`` is the support radius of the compact bump; ``tail`` is the
    decay exponent of the power law, which must exceed 2d.
    """

    family: str = "gaussian"
    dim_d: int = 1
    radius: float = 1.0
    tail: float = 5.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        if self.dim_d < 1:
            raise ValueError("dim_d must be positive")
        if self.family == "compact_bump" and not self.radius > 0:
            raise ValueError("support radius must be positive")
        if self.family == "power_law" and not self.tail > 2 * self.dim_d:
            raise ValueError("power-law tail exponent must exceed 2d")

    @classmethod
    def from_spec(cls, spec, dim_d=1):
        """Build from a config mapping {"family": ..., "params": {...}}."""
        params = dict(spec.get("params", {}))
        family = spec.get("family", "gaussian")
        kw = {"family": family, "dim_d": int(spec.get("dim_d", dim_d))}
        if family == "compact_bump":
            kw["radius"] = float(params.get("radius", params.get("r", 1.0)))
        elif family == "power_law":
            kw["tail"] = float(params.get("tail", params.get("gamma_tail", 5.0)))
        unknown = set(params) - {"radius", "r", "tail", "gamma_tail"}
        if unknown:
            raise ValueError(f"unknown kernel parameters {sorted(unknown)}")
        return cls(**kw)

    def to_spec(self):
        params = {}
        if self.family == "compact_bump":
            params["radius"] = self.radius
        elif self.family == "power_law":
            params["tail"] = self.tail
        return {"family": self.family, "params": params, "dim_d": self.dim_d}

    @property
    def is_gaussian(self):
        return self.family == "gaussian"

    @property
    def support(self):
        """Support radius, or infinity."""
        return self.radius if self.family == "compact_bump" else np.inf

    def profile(self, r):
        """Radial profile g(|x| = r) (normalised, vectorised)."""
        r = np.asarray(r, dtype=float)
        d = self.dim_d
        if self.family == "gaussian":
            return pi**d * np.exp(-(pi * r) ** 2)
        if self.family == "power_law":
            return _power_law_const(d, self.tail) * (1.0 + r) ** (-self.tail)
        u = r / self.radius
        out = np.zeros_like(u)
        inside = u < 1
        out[inside] = np.exp(-1.0 / (1.0 - u[inside] ** 2))
        return out * _bump_const(d, self.radius)

    def density(self, x):
        """g(x) for points x of shape (..., 2d)."""
        x = np.asarray(x, dtype=float)
        return self.profile(np.sqrt((x * x).sum(-1)))

    def fourier(self, rho):
        """Radial Fourier transform ghat at |xi| = rho (vectorised)."""
        rho = np.abs(np.asarray(rho, dtype=float))
        if self.family == "gaussian":
            return np.exp(-rho * rho)
        flat = rho.ravel()
        out = np.ones_like(flat)
        pos = flat > 0
        if pos.any():
            # the quadrature cost depends on the radius, so group by size
            idx = np.flatnonzero(pos)
            order = idx[np.argsort(flat[idx])]
            for chunk in np.array_split(order, max(1, len(order) // 4096)):
                out[chunk] = _radial_ft(self, flat[chunk])
        return out.reshape(rho.shape)

    def log_fourier(self, rho):
        """log |ghat(rho)|; exact quadratic form for the Gaussian."""
        rho = np.asarray(rho, dtype=float)
        if self.family == "gaussian":
            return -rho * rho
        with np.errstate(divide="ignore"):
            return np.log(np.abs(self.fourier(rho)))

    def fourier_envelope(self, rho):
        """Upper bound of |ghat| on [rho, inf), used to certify lattice searches."""
        rho = np.abs(np.asarray(rho, dtype=float))
        if self.family == "gaussian":
            return np.exp(-rho * rho)
        grid, env = _envelope_table(self)
        out = np.interp(rho, grid, env, right=env[-1])
        return out


def _sphere_area(dim):
    # surface area of the unit sphere in R^dim
    return 2 * pi ** (dim / 2) / gamma_fn(dim / 2)


@lru_cache(maxsize=None)
def _power_law_const(d, tail):
    # int_0^inf r^{2d-1} (1+r)^{-tail} dr = B(2d, tail - 2d)
    return 1.0 / (_sphere_area(2 * d) * special.beta(2 * d, tail - 2 * d))


@lru_cache(maxsize=None)
def _bump_const(d, radius):
    val, _ = integrate.quad(
        lambda s: np.exp(-1.0 / (1.0 - s * s)) * s ** (2 * d - 1), 0.0, 1.0, epsabs=0, epsrel=1e-13
    )
    return 1.0 / (_sphere_area(2 * d) * val * radius ** (2 * d))


@lru_cache(maxsize=None)
def _gauss_legendre(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return (x + 1) / 2, w / 2


def _composite_nodes(edges, order=24):
    """Nodes and weights of a composite Gauss-Legendre rule on the given panels."""
    x, w = _gauss_legendre(order)
    lo, hi = edges[:-1, None], edges[1:, None]
    return (lo + (hi - lo) * x).ravel(), ((hi - lo) * w).ravel()


def _chunked(rho, n_nodes, fn, budget=1 << 22):
    out = np.empty_like(rho)
    step = max(1, budget // max(n_nodes, 1))
    for i in range(0, len(rho), step):
        out[i : i + step] = fn(rho[i : i + step])
    return out


def _power_law_ft(kernel, rho):
    # (1+r)^-a is a Laplace mixture of exp(-t r); the Hankel transform of
    # exp(-t r) in R^{2d} is closed form, leaving a smooth t-integral
    d, tail = kernel.dim_d, kernel.tail
    log_pref = (
        np.log(_power_law_const(d, tail))
        + np.log(2 * pi)
        + (d - 1) * np.log(4 * pi)
        + np.log(2.0)
        + lgamma(d + 0.5)
        - 0.5 * np.log(pi)
        - lgamma(tail)
    )
    top = tail + 80.0 + 12 * sqrt(tail)
    # geometric grading toward t = 0 resolves the t^tail endpoint and the scale a
    edges = np.concatenate([[0.0], np.logspace(-14, 0, 29), np.linspace(1.0, top, 97)[1:]])
    t, w = _composite_nodes(edges)
    base = tail * np.log(t) - t + log_pref

    def fn(r):
        a = 2 * pi * r[:, None]
        return (np.exp(base - (d + 0.5) * np.log(t * t + a * a)) * w).sum(1)

    return _chunked(rho, len(t), fn)


def _bump_ft(kernel, rho):
    # Hankel transform over the support, panels shorter than a Bessel period
    d, R = kernel.dim_d, kernel.radius
    c = _bump_const(d, R)
    panels = max(64, int(np.ceil(float(rho.max(initial=0.0)) * R)) + 8)
    # extra grading toward the edge, where the profile is flat to all orders
    edges = np.union1d(np.linspace(0.0, R, panels + 1), R * (1 - np.logspace(-5, -1.5, 8)))
    s, w = _composite_nodes(edges, order=16)
    u = s / R
    weight = np.exp(-1.0 / (1.0 - u * u)) * s**d * w
    bessel = {1: special.j0, 2: special.j1}.get(d, lambda x: special.jv(d - 1, x))

    def fn(r):
        return 2 * pi * c * r ** (1 - d) * (bessel(2 * pi * r[:, None] * s) * weight).sum(1)

    return _chunked(rho, len(s), fn)


def _radial_ft(kernel, rho):
    """ghat at radii rho > 0 for the non-Gaussian families (vectorised quadrature)."""
    rho = np.asarray(rho, dtype=float)
    if kernel.family == "power_law":
        return _power_law_ft(kernel, rho)
    return _bump_ft(kernel, rho)


@lru_cache(maxsize=None)
def _envelope_table(kernel):
    # running maximum of |ghat| from the right on a fine radial grid
    top = 400.0 / kernel.radius if kernel.family == "compact_bump" else 400.0
    grid = np.linspace(0.0, top, 4001)
    vals = np.abs(kernel.fourier(grid))
    env = np.maximum.accumulate(vals[::-1])[::-1]
    # shift by one cell so the bound also covers points between nodes
    env = np.concatenate([env[:1], np.maximum(env[:-1], env[1:])])
    return grid, env


def classical_eigenvalue(kernel, eps, k):
    """ghat(eps k) for lattice (or real) vectors k of shape (..., 2d)."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    k = np.asarray(k, dtype=float)
    return kernel.fourier(eps * np.sqrt((k * k).sum(-1)))


def log_classical_eigenvalue(kernel, eps, k):
    k = np.asarray(k, dtype=float)
    return kernel.log_fourier(eps * np.sqrt((k * k).sum(-1)))


def _theta_terms(sigma, xi):
    # direct branch: reduce xi to [-1/2, 1/2], sum around the dominant term
    xi = np.asarray(xi, dtype=float)
    xi = xi - np.round(xi)
    nmax = int(np.ceil(sqrt(_UNDERFLOW) / sigma)) + 2
    nu = np.arange(-nmax, nmax + 1)
    return xi, nu


def log_theta(sigma, xi):
    """log theta_sigma(xi), accurate in both the narrow and wide regimes."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    xi = np.asarray(xi, dtype=float)
    if sigma >= SQRT_PI:
        x, nu = _theta_terms(sigma, xi)
        # exponents relative to the nu = 0 term
        shift = (x[..., None] + nu) ** 2 - x[..., None] ** 2
        rest = np.exp(-sigma * sigma * shift)
        rest[..., nu.size // 2] = 0.0
        return -sigma * sigma * x * x + np.log1p(rest.sum(-1))
    m = np.arange(1, int(np.ceil(sigma * sqrt(_UNDERFLOW) / pi)) + 2)
    qm = np.exp(-((pi * m / sigma) ** 2))
    series = 2.0 * (qm * np.cos(2 * pi * m * xi[..., None])).sum(-1)
    return np.log(SQRT_PI / sigma) + np.log1p(series)


def theta(sigma, xi):
    """Jacobi theta function theta_sigma(xi) = sum_nu exp(-sigma^2 (xi+nu)^2)."""
    out = np.exp(log_theta(sigma, xi))
    return out.item() if out.ndim == 0 else out


def log_theta_ratio(sigma, xi):
    """log(theta_sigma(xi) / theta_sigma(0)) without cancellation near 1."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    xi = np.asarray(xi, dtype=float)
    if sigma >= SQRT_PI:
        return log_theta(sigma, xi) - log_theta(sigma, 0.0)
    m = np.arange(1, int(np.ceil(sigma * sqrt(_UNDERFLOW) / pi)) + 2)
    qm = np.exp(-((pi * m / sigma) ** 2))
    drop = 4.0 * (qm * np.sin(pi * m * xi[..., None]) ** 2).sum(-1)
    return np.log1p(-drop / (1.0 + 2.0 * qm.sum()))


def theta_direct(sigma, xi, terms=60):
    """Plain truncated sum, used as an independent check."""
    nu = np.arange(-terms, terms + 1)
    return float(np.exp(-sigma * sigma * (xi + nu) ** 2).sum())


def ges_bounds(eps, N, k, d=None):
    """Gaussian sandwich exp(-eps^2|k^N|^2) <= gamma(k) <= that + 4d exp(-(eps N)^2/4)."""
    k = np.asarray(k)
    d = k.shape[-1] // 2 if d is None else d
    kN = fold(k, N).astype(float)
    lower = np.exp(-eps * eps * (kN * kN).sum(-1))
    return lower, lower + 4 * d * np.exp(-((eps * N) ** 2) / 4)


def _check_args(eps, N, allow_zero=False):
    if not (eps > 0 or (allow_zero and eps == 0)):
        raise ValueError("eps must be positive")
    if N < 1:
        raise ValueError("N must be positive")


@lru_cache(maxsize=64)
def _gaussian_log_axis(eps, N):
    # log theta ratio for each residue j mod N, as a float
    j = fold(np.arange(N), N)
    out = log_theta_ratio(eps * N, j / N)
    out[0] = 0.0
    out.setflags(write=False)
    return out


def _lattice_points(radius, dim):
    ax = np.arange(-radius, radius + 1)
    grids = np.meshgrid(*([ax] * dim), indexing="ij")
    return np.stack(grids, -1).reshape(-1, dim)


@lru_cache(maxsize=32)
def _residue_mass(kernel, eps, N):
    """Kernel weights g(n/s) summed over residue classes n mod N.

    Returns (array indexed by residues, analytic tail mass outside the
    summed region).  The common factor s^{-2d} is dropped.
    """
    s = eps * N
    dim = 2 * kernel.dim_d
    if kernel.family == "compact_bump":
        radius = int(np.floor(kernel.radius * s))
        tail = 0.0
    else:
        radius = int(np.floor(0.5 * _DIRECT_SUM_BUDGET ** (1.0 / dim)))
        # continuum mass beyond the summation ball, in lattice units
        cut = (radius + 0.5) / s
        c = _power_law_const(kernel.dim_d, kernel.tail)
        mass = integrate.quad(
            lambda r: r ** (dim - 1) * (1 + r) ** (-kernel.tail), cut, np.inf, epsabs=0, epsrel=1e-12
        )[0]
        tail = c * _sphere_area(dim) * mass * s**dim
    pts = _lattice_points(radius, dim)
    r = np.sqrt((pts * pts).sum(1)) / s
    keep = r < (radius + 0.5) / s
    pts, r = pts[keep], r[keep]
    w = kernel.profile(r)
    res = np.zeros((N,) * dim)
    np.add.at(res, tuple(np.mod(pts, N).T), w)
    return res, tail


@lru_cache(maxsize=32)
def _table(kernel, eps, N):
    """(gamma table, log|gamma| table) indexed by k mod N."""
    d = kernel.dim_d
    shape = (N,) * (2 * d)
    if eps == 0:
        ones = np.ones(shape)
        return ones, np.zeros(shape)
    if kernel.is_gaussian:
        axis = _gaussian_log_axis(eps, N)
        logt = np.zeros(shape)
        for c in range(2 * d):
            logt = logt + axis.reshape([-1 if i == c else 1 for i in range(2 * d)])
        tab = np.exp(logt)
    else:
        res, tail = _residue_mass(kernel, eps, N)
        spec = np.fft.fftn(res)
        # gamma(k) pairs k with the residue sum at a = (k_p, -k_q)
        idx = np.indices(shape).reshape(2 * d, -1)
        a = np.concatenate([idx[d:], -idx[:d]]) % N
        num = spec[tuple(a)].real.reshape(shape)
        den = spec.flat[0].real + tail
        if not den > 0:
            raise ValueError("noise normalisation vanishes")
        tab = num / den
        tab.flat[0] = 1.0
        if kernel.family == "compact_bump" and np.count_nonzero(res) == 1:
            tab = np.ones(shape)
        with np.errstate(divide="ignore"):
            logt = np.log(np.abs(tab))
    tab.setflags(write=False)
    logt.setflags(write=False)
    return tab, logt


def eigenvalue_table(kernel, eps, N):
    """gamma_{eps,N}(k) for all k in (Z/N)^{2d}, indexed by k mod N."""
    _check_args(eps, N, allow_zero=True)
    return _table(kernel, float(eps), int(N))[0]


def log_eigenvalue_table(kernel, eps, N):
    """log |gamma_{eps,N}(k)| on the same index grid (underflow-safe)."""
    _check_args(eps, N, allow_zero=True)
    return _table(kernel, float(eps), int(N))[1]


def quantum_eigenvalue(kernel, eps, N, k, method="auto"):
    """Eigenvalue gamma_{eps,N}(k) of the quantised noise on the mode W_k.

    ``method`` selects the evaluation route: ``theta`` (Gaussian only),
    ``direct`` (lattice sum over the kernel) or ``poisson`` (resummed
    through ghat).  ``auto`` uses the cached table.
    """
    _check_args(eps, N)
    k = np.asarray(k, dtype=np.int64)
    if k.shape[-1] != 2 * kernel.dim_d:
        raise ValueError("k has the wrong dimension for this kernel")
    if method == "auto":
        tab = eigenvalue_table(kernel, eps, N)
        return tab[tuple(np.mod(k, N).T)]
    if method == "theta":
        if not kernel.is_gaussian:
            raise ValueError("theta route needs the Gaussian kernel")
        return np.exp(log_theta_ratio(eps * N, fold(k, N) / N).sum(-1))
    if method == "direct":
        return _direct_gamma(kernel, eps, N, k)
    if method == "poisson":
        return _poisson_gamma(kernel, eps, N, k)
    raise ValueError(f"unknown method {method!r}")


def _direct_gamma(kernel, eps, N, k):
    s = eps * N
    dim = 2 * kernel.dim_d
    if kernel.family == "compact_bump":
        radius = int(np.floor(kernel.radius * s))
    elif kernel.is_gaussian:
        radius = int(np.ceil(s * sqrt(_UNDERFLOW) / pi)) + 1
    else:
        return quantum_eigenvalue(kernel, eps, N, k)
    pts = _lattice_points(radius, dim)
    w = kernel.density(pts / s)
    d = kernel.dim_d
    ks = np.atleast_2d(k)
    wedge = ks[:, None, d:] * pts[None, :, :d]
    wedge = wedge.sum(-1) - (ks[:, None, :d] * pts[None, :, d:]).sum(-1)
    phase = np.cos(2 * pi * np.mod(wedge, N) / N)
    out = (phase * w).sum(-1) / w.sum()
    return out.reshape(k.shape[:-1])


def _poisson_gamma(kernel, eps, N, k, terms=None):
    s = eps * N
    dim = 2 * kernel.dim_d
    if terms is None:
        terms = int(np.ceil(sqrt(_UNDERFLOW) / s)) + 2 if kernel.is_gaussian else 24
    m = _lattice_points(terms, dim)
    d = kernel.dim_d
    ks = np.atleast_2d(k).astype(float)
    # k^n / N = n . a / N with a = (k_p, -k_q)
    a = np.concatenate([ks[:, d:], -ks[:, :d]], axis=1) / N
    xi = a[:, None, :] + m[None]
    num = kernel.fourier(s * np.sqrt((xi * xi).sum(-1))).sum(-1)
    den = kernel.fourier(s * np.sqrt((m * m).sum(-1).astype(float))).sum()
    return (num / den).reshape(np.shape(k)[:-1])


def normalization(kernel, eps, N):
    """Dimensionless normalisation sum_n g_{eps N}(n) of the quantum noise."""
    _check_args(eps, N)
    s = eps * N
    dim = 2 * kernel.dim_d
    if kernel.is_gaussian:
        return float(np.exp(dim * log_theta(s, 0.0)))
    res, tail = _residue_mass(kernel, eps, N)
    total = res.sum() + tail
    if not total > 0:
        raise ValueError("noise normalisation vanishes")
    return float(total / s**dim)


def min_abs_eigenvalue(kernel, eps, N):
    """(min_k |gamma(k)|, its log) over all k, the quantity behind quantum-limit bounds."""
    logt = log_eigenvalue_table(kernel, eps, N)
    lo = float(logt.min())
    return float(np.exp(lo)), lo


def max_nonzero_eigenvalue(kernel, eps, N):
    """max_{k != 0} |gamma(k)|."""
    tab = np.abs(eigenvalue_table(kernel, eps, N)).ravel()
    return float(tab[1:].max()) if tab.size > 1 else 0.0
