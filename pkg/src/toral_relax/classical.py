"""Classical maps on the torus and their noisy transfer operators.

A map is Phi = F o t_v o Phi_1: first the time-one flow of a kick
Hamiltonian, then a translation by v, then the linear automorphism F.  Its
Koopman operator acts on Fourier modes as

    w_k o F = w_{F^{-1} k},   w_k o t_v = exp(2 pi i k^v) w_k,

and for a kick depending on q alone, w_k o Phi_1 = w_k exp(2 pi i k_q H'(q)),
which is a convolution in the p-frequency.  That gives an exact
coefficient-space Koopman step for the standard kicked maps; anything else
falls back to quadrature on uniform grids.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import sparse

from .lattice import SymplecticIntMatrix, canonical_tiebreak, min_orbit_extension, wedge
from .linalg import operator_norm
from .noise import classical_eigenvalue
from .results import ConvergenceError, PropagatorNorm
from .series import FourierSeries, unique_rows

FLOW_STEP = 1.0 / 64
# Fourier coefficients below this are treated as zero (FFT roundoff level)
COEFF_FLOOR = 1e-15


def _pairs(series):
    s = series.merged()
    return tuple(sorted((tuple(int(x) for x in k), complex(v)) for k, v in zip(s.keys, s.values)))


@dataclass(frozen=True)
class ClassicalMapSpec:
    """Phi = F o t_v o Phi_1 with an optional kick Hamiltonian H (a real Fourier series)."""

    linear_part: SymplecticIntMatrix
    translation: tuple = None
    kick: tuple = None

    def __post_init__(self):
        F = SymplecticIntMatrix.coerce(self.linear_part)
        object.__setattr__(self, "linear_part", F)
        dim = 2 * F.dim_d
        v = (0.0,) * dim if self.translation is None else tuple(float(x) % 1.0 for x in self.translation)
        if len(v) != dim:
            raise ValueError("translation must have 2d components")
        object.__setattr__(self, "translation", v)
        if self.kick is not None:
            if isinstance(self.kick, tuple) and all(isinstance(p, tuple) and len(p) == 2 for p in self.kick):
                H = FourierSeries.coerce(dict(self.kick), F.dim_d)
            else:
                H = FourierSeries.coerce(self.kick, F.dim_d)
            if H.dim_d != F.dim_d:
                raise ValueError("kick dimension does not match the linear part")
            if not H.is_real():
                raise ValueError("kick Hamiltonian must be real (c_{-k} = conj c_k)")
            H = H.mean_free().merged(drop=0.0)
            object.__setattr__(self, "kick", _pairs(H) if len(H.keys) else None)

    @classmethod
    def kicked(cls, F, kappa, translation=None):
        """Standard kick H = kappa/(2 pi)^2 cos(2 pi q), so p -> p + kappa/(2 pi) sin(2 pi q)."""
        H = FourierSeries.cos_q(kappa / (2 * np.pi) ** 2)
        return cls(F, translation, H)

    @property
    def dim_d(self):
        return self.linear_part.dim_d

    @property
    def kick_series(self):
        if self.kick is None:
            return FourierSeries.coerce({}, self.dim_d)
        return FourierSeries.coerce(dict(self.kick), self.dim_d)

    @property
    def is_linear(self):
        return self.kick is None and not any(self.translation)

    @property
    def kick_kind(self):
        """None, 'q' (H depends on q only), 'p', 'separable' or 'mixed'."""
        if self.kick is None:
            return None
        keys = self.kick_series.keys
        d = self.dim_d
        has_q = np.any(keys[:, d:] != 0, axis=1)  # depends on q through k_p
        has_p = np.any(keys[:, :d] != 0, axis=1)
        if not has_p.any():
            return "q"
        if not has_q.any():
            return "p"
        if not np.any(has_q & has_p):
            return "separable"
        return "mixed"

    # pointwise dynamics -------------------------------------------------

    def _dH(self, x):
        dq, dp = self.kick_series.gradient(x)
        return dq.real, dp.real

    def kick_flow(self, x):
        """Time-one flow of the kick Hamiltonian (closed form when H depends on one variable)."""
        x = np.array(x, dtype=float)
        if self.kick is None:
            return x
        d = self.dim_d
        kind = self.kick_kind
        q, p = x[..., :d], x[..., d:]
        if kind == "q":
            dq, _ = self._dH(x)
            return np.concatenate([q, p - dq], axis=-1)
        if kind == "p":
            _, dp = self._dH(x)
            return np.concatenate([q + dp, p], axis=-1)
        steps = int(round(1.0 / FLOW_STEP))
        h = FLOW_STEP
        if kind == "separable":
            # Stormer-Verlet: half kick in p, drift in q, half kick
            for _ in range(steps):
                dq, _ = self._dH(np.concatenate([q, p], -1))
                p = p - 0.5 * h * dq
                _, dp = self._dH(np.concatenate([q, p], -1))
                q = q + h * dp
                dq, _ = self._dH(np.concatenate([q, p], -1))
                p = p - 0.5 * h * dq
            return np.concatenate([q, p], axis=-1)

        def vec(y):
            gq, gp = self._dH(y)
            return np.concatenate([gp, -gq], axis=-1)

        y = x
        for _ in range(steps):
            k1 = vec(y)
            k2 = vec(y + 0.5 * h * k1)
            k3 = vec(y + 0.5 * h * k2)
            k4 = vec(y + h * k3)
            y = y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        return y

    def __call__(self, x):
        """Phi(x), reduced mod 1."""
        y = self.kick_flow(x) + np.asarray(self.translation)
        return np.mod(y @ self.linear_part.matrix.T.astype(float), 1.0)

    def iterate(self, x, n):
        for _ in range(n):
            x = self(x)
        return x


# coefficient-space Koopman operator ------------------------------------


@lru_cache(maxsize=64)
def _kick_derivative(kick, kind, M):
    """Samples of H' on the uniform grid u_j = j/M of the kicked variable."""
    spec = ClassicalMapSpec(SymplecticIntMatrix([[1, 0], [0, 1]]), None, kick)
    pts = np.zeros((M, 2))
    pts[:, 0 if kind == "q" else 1] = np.arange(M) / M
    dq, dp = spec._dH(pts)
    return (dq if kind == "q" else dp)[:, 0]


@lru_cache(maxsize=8192)
def _kick_factor(kick, kind, c):
    """Fourier coefficients (shifts, values) of exp(2 pi i c H'(u)) in the kicked variable."""
    # Carson-type bandwidth estimate |c| max|H''| sets the starting grid
    base = _kick_derivative(kick, kind, 256)
    slope = np.abs(np.diff(np.append(base, base[0]))).max() * 256
    M = 64
    while M < 4 * (abs(c) * slope + 32):
        M *= 2
    while True:
        coef = np.fft.fft(np.exp(2j * np.pi * c * _kick_derivative(kick, kind, M))) / M
        shifts = np.fft.fftfreq(M, 1.0 / M).astype(np.int64)
        outer = np.abs(shifts) >= M // 4
        if np.abs(coef[outer]).max() < COEFF_FLOOR or M >= 1 << 16:
            break
        M *= 2
    keep = np.abs(coef) > COEFF_FLOOR
    return shifts[keep], coef[keep]


def _kick_series_step(spec, f, sign=1):
    kind = spec.kick_kind
    keys, vals = f.keys, f.values
    # q-kick: factor depends on k_q and shifts k_p by +m; p-kick: depends on k_p, shifts k_q by -m
    ci, si, sgn = (0, 1, 1) if kind == "q" else (1, 0, -1)
    out_k, out_v = [], []
    for c in np.unique(keys[:, ci]):
        rows = keys[:, ci] == c
        if c == 0:
            out_k.append(keys[rows])
            out_v.append(vals[rows])
            continue
        shifts, coef = _kick_factor(spec.kick, kind, sign * int(c))
        k = np.repeat(keys[rows], len(shifts), axis=0)
        k[:, si] += sgn * np.tile(shifts, rows.sum())
        out_k.append(k)
        out_v.append((vals[rows][:, None] * coef[None, :]).ravel())
    return FourierSeries(np.concatenate(out_k), np.concatenate(out_v)).merged()


def _require_exact_step(spec):
    if spec.kick is not None and (spec.kick_kind not in ("q", "p") or spec.dim_d != 1):
        raise ValueError("exact coefficient-space step needs a one-variable kick in one degree of freedom")


def _drop_small(g, drop):
    small = np.abs(g.values) <= drop
    lost = float(np.sqrt((np.abs(g.values[small]) ** 2).sum()))
    return FourierSeries(g.keys[~small], g.values[~small]), lost


def koopman_step(spec, f, drop=COEFF_FLOOR):
    """f o Phi as a Fourier series, with the L2 mass of dropped coefficients.

    Exact in coefficient space for linear parts, translations and kicks
    depending on q alone or p alone (one degree of freedom).
    """
    _require_exact_step(spec)
    f = FourierSeries.coerce(f, spec.dim_d)
    keys = f.keys @ spec.linear_part.inverse.T
    vals = f.values * np.exp(2j * np.pi * wedge(keys.astype(float), np.asarray(spec.translation)))
    g = FourierSeries(keys, vals)
    if spec.kick is None:
        return g, 0.0
    return _drop_small(_kick_series_step(spec, g), drop)


def koopman_adjoint_step(spec, f, drop=COEFF_FLOOR):
    """f o Phi^{-1}, the adjoint of the Koopman step (Phi preserves volume)."""
    _require_exact_step(spec)
    f = FourierSeries.coerce(f, spec.dim_d)
    if spec.kick is not None:
        f = _kick_series_step(spec, f, sign=-1)
    vals = f.values * np.exp(-2j * np.pi * wedge(f.keys.astype(float), np.asarray(spec.translation)))
    g = FourierSeries(f.keys @ spec.linear_part.matrix.T, vals)
    return _drop_small(g, drop) if spec.kick is not None else (g, 0.0)


def _grid(M):
    u = np.arange(M) / M
    q, p = np.meshgrid(u, u, indexing="ij")
    return np.stack([q, p], axis=-1)


def _grid_coefficients(values, M):
    """Fourier coefficients of grid samples: c_j at fft index (j_p, -j_q) mod M."""
    return np.fft.fft2(values) / (M * M)


def _coefficient_lookup(C, keys, M):
    keys = np.asarray(keys)
    return C[np.mod(keys[:, 1], M), np.mod(-keys[:, 0], M)]


def compose_series(spec, f, n, method="auto", tol=1e-9, max_grid=2048):
    """f o Phi^n as a Fourier series, and an error estimate (dropped L2 mass).

    ``method`` is 'spectral' (exact coefficient-space steps), 'quadrature'
    (sampling on a uniform grid refined until stable) or 'auto'.
    """
    f = FourierSeries.coerce(f, spec.dim_d)
    if method == "auto":
        method = "spectral" if spec.kick is None or (spec.dim_d == 1 and spec.kick_kind in ("q", "p")) else "quadrature"
    if method == "spectral":
        lost = 0.0
        for _ in range(n):
            f, dl = koopman_step(spec, f)
            lost = float(np.hypot(lost, dl))
        return f, lost
    if spec.dim_d != 1:
        raise ValueError("quadrature composition needs one degree of freedom")
    M = 32
    prev = None
    while M <= max_grid:
        x = spec.iterate(_grid(M), n)
        C = _grid_coefficients(f(x), M)
        shifts = np.fft.fftfreq(M, 1.0 / M).astype(np.int64)
        jp, mjq = np.meshgrid(shifts, shifts, indexing="ij")
        keys = np.stack([-mjq.ravel(), jp.ravel()], axis=1)
        inner = np.maximum(np.abs(keys[:, 0]), np.abs(keys[:, 1])) < M // 4
        series = FourierSeries(keys[inner], C.ravel()[inner])
        if prev is not None:
            diff = float(np.abs(_coefficient_lookup(C, prev.keys, M) - prev.values).max())
            tail = float(np.sqrt(max(0.0, (np.abs(C) ** 2).sum() - (np.abs(series.values) ** 2).sum())))
            if diff < tol and tail < tol:
                return series.merged(drop=COEFF_FLOOR), max(diff, tail)
        prev = series
        M *= 2
    raise ConvergenceError("quadrature for f o Phi^n did not converge", diff)


# Galerkin truncation ---------------------------------------------------


def box_modes(K, d=1):
    """Nonzero modes with |k|_inf <= K in lexicographic order."""
    axes = [np.arange(-K, K + 1)] * (2 * d)
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, 2 * d)
    return pts[np.any(pts != 0, axis=1)]


def _mode_index(modes, K):
    # position of each mode of the box in ``modes`` (-1 outside)
    side = 2 * K + 1
    table = -np.ones(side ** modes.shape[1], dtype=np.int64)
    table[np.ravel_multi_index(tuple((modes + K).T), (side,) * modes.shape[1])] = np.arange(len(modes))
    return table


def _lookup(keys, K, table):
    inside = np.all(np.abs(keys) <= K, axis=1)
    out = -np.ones(len(keys), dtype=np.int64)
    side = 2 * K + 1
    out[inside] = table[np.ravel_multi_index(tuple((keys[inside] + K).T), (side,) * keys.shape[1])]
    return out


@dataclass(frozen=True)
class GalerkinMatrix:
    """Koopman matrix <w_j, w_k o Phi> on the modes 0 < |k|_inf <= K."""

    matrix: object
    modes: np.ndarray
    K: int
    method: str
    grid: int = 0
    error: float = 0.0
    info: dict = field(default_factory=dict, compare=False)

    def index(self, k):
        hit = np.flatnonzero(np.all(self.modes == np.asarray(k), axis=1))
        if not len(hit):
            raise KeyError(f"mode {tuple(k)} outside the cutoff")
        return int(hit[0])

    def dense(self):
        return self.matrix.toarray() if sparse.issparse(self.matrix) else np.asarray(self.matrix)

    def leakage(self):
        """Per-column mass lost outside the cutoff: 1 - |column|^2."""
        M = self.matrix
        sq = np.asarray(abs(M).power(2).sum(0)).ravel() if sparse.issparse(M) else (np.abs(M) ** 2).sum(0)
        return 1.0 - sq


def galerkin_koopman(spec, K, method="auto", tol=1e-9, max_grid=1024):
    """Galerkin truncation of the Koopman operator of ``spec`` to 0 < |k|_inf <= K.

    Without a kick the matrix is an exact phased permutation.  One-variable
    kicks are assembled exactly from the Fourier coefficients of the kick
    factor (sparse).  Otherwise, or with method='quadrature', the matrix
    elements come from trapezoidal quadrature on M x M grids, M starting at
    4K and doubling until successive matrices agree to ``tol``.
    """
    if spec.dim_d != 1:
        raise ValueError("Galerkin matrices are built for one degree of freedom")
    if K < 1:
        raise ValueError("cutoff K must be positive")
    modes = box_modes(K)
    n = len(modes)
    table = _mode_index(modes, K)
    if method == "auto":
        method = "spectral" if spec.kick is None or spec.kick_kind in ("q", "p") else "quadrature"
    if method == "spectral":
        Finv = spec.linear_part.inverse
        img = modes @ Finv.T
        phase = np.exp(2j * np.pi * wedge(img.astype(float), np.asarray(spec.translation)))
        if spec.kick is None:
            rows = _lookup(img, K, table)
            ok = rows >= 0
            M = sparse.csc_matrix((phase[ok], (rows[ok], np.flatnonzero(ok))), shape=(n, n))
            return GalerkinMatrix(M, modes, K, "exact")
        kind = spec.kick_kind
        ci, si, sgn = (0, 1, 1) if kind == "q" else (1, 0, -1)
        R, C, V = [], [], []
        for col, (k, t) in enumerate(zip(img, phase)):
            if k[ci] == 0:
                shifts, coef = np.zeros(1, dtype=np.int64), np.ones(1, dtype=complex)
            else:
                shifts, coef = _kick_factor(spec.kick, kind, int(k[ci]))
            keys = np.repeat(k[None], len(shifts), axis=0)
            keys[:, si] += sgn * shifts
            rows = _lookup(keys, K, table)
            ok = rows >= 0
            R.append(rows[ok])
            C.append(np.full(ok.sum(), col))
            V.append(t * coef[ok])
        M = sparse.csc_matrix((np.concatenate(V), (np.concatenate(R), np.concatenate(C))), shape=(n, n))
        return GalerkinMatrix(M, modes, K, "spectral")
    if method != "quadrature":
        raise ValueError(f"unknown method {method!r}")
    M = 4 * K
    prev = None
    while M <= max_grid:
        x = spec(_grid(M))
        mat = np.empty((n, n), dtype=complex)
        for col, k in enumerate(modes):
            vals = np.exp(2j * np.pi * wedge(k.astype(float), x))
            mat[:, col] = _coefficient_lookup(_grid_coefficients(vals, M), modes, M)
        if prev is not None:
            err = float(np.abs(mat - prev).max())
            if err < tol:
                return GalerkinMatrix(mat, modes, K, "quadrature", M, err)
        prev = mat
        M *= 2
    raise ConvergenceError("Galerkin quadrature did not converge", err if prev is not None else None)


def noise_diagonal(kernel, eps, modes):
    return classical_eigenvalue(kernel, eps, modes)


def classical_norm_truncated(spec, kernel, eps, n, K, flavor="noisy", check_truncation=True, tol=1e-10, seed=0):
    """Largest singular value of the Galerkin-truncated noisy (or coarse) propagator.

    noisy: (G K_Phi)^n;  coarse: G K_Phi^n G; G = diag ghat(eps k) on the modes.
    With ``check_truncation`` the computation is repeated at cutoff 2K and
    the difference reported in ``info['truncation_delta']``.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    if flavor not in ("noisy", "coarse"):
        raise ValueError("flavor is noisy or coarse")

    def at(K):
        gal = galerkin_koopman(spec, K)
        g = noise_diagonal(kernel, eps, gal.modes)
        A = gal.matrix
        dim = len(gal.modes)
        if flavor == "noisy":
            if n == 0:
                return 1.0, gal

            def mv(v):
                for _ in range(n):
                    v = g * (A @ v)
                return v

            def rmv(v):
                for _ in range(n):
                    v = A.conj().T @ (g.conj() * v)
                return v
        else:

            def mv(v):
                v = g * v
                for _ in range(n):
                    v = A @ v
                return g * v

            def rmv(v):
                v = g.conj() * v
                for _ in range(n):
                    v = A.conj().T @ v
                return g.conj() * v

        sigma, _ = operator_norm(mv, rmv, dim, tol=tol, seed=seed)
        return sigma, gal

    sigma, gal = at(K)
    info = {"K": K, "method": gal.method}
    if check_truncation:
        try:
            sigma2, _ = at(2 * K)
            info["truncation_delta"] = abs(sigma2 - sigma)
        except (MemoryError, ConvergenceError):
            info["truncation_delta"] = None
    return PropagatorNorm.from_value(min(sigma, 1.0), n, None, flavor, "classical", **info)


# exact norms for linear maps -------------------------------------------


def _general_search(F, kernel, eps, exps, R, max_radius=1 << 12):
    """max over nonzero j of sum_e log|ghat(eps F^e j)| for e in ``exps``.

    The box |j|_inf <= R is doubled until the first factor's envelope at the
    boundary falls below the best value (every |ghat| is at most 1).
    """
    mats = [F.power(e) for e in exps]
    fmats = [np.array(m.tolist(), dtype=float) for m in mats]

    def logs(points):
        acc = np.zeros(len(points))
        for A in fmats:
            rad = np.sqrt(((points @ A.T) ** 2).sum(1))
            acc += kernel.log_fourier(eps * rad)
            if np.all(np.isneginf(acc)):
                break
        return acc

    while True:
        pts = box_modes(R, F.dim_d).astype(float)
        # cheap envelope bound first, exact transform only on survivors
        ub = np.zeros(len(pts))
        for A in fmats:
            ub += np.log(np.maximum(kernel.fourier_envelope(eps * np.sqrt(((pts @ A.T) ** 2).sum(1))), 1e-320))
        seed = np.argsort(-ub)[:64]
        best = logs(pts[seed]).max()
        cand = np.flatnonzero(ub >= best - 1e-12)
        vals = logs(pts[cand])
        best = vals.max()
        winners = pts[cand[vals >= best - 1e-12 * max(1.0, abs(best))]].astype(np.int64)
        edge = float(np.log(max(kernel.fourier_envelope(eps * (R + 1)), 1e-320)))
        if edge < best or R >= max_radius:
            arg = canonical_tiebreak([tuple(int(x) for x in w) for w in winners])
            return float(best), arg, R, edge < best
        R *= 2


def classical_norm_linear(F, kernel, eps, n, R=1):
    """max_{k != 0} prod_{l=1}^n |ghat(eps F^l k)| for a linear automorphism F."""
    F = SymplecticIntMatrix.coerce(F)
    if n < 0:
        raise ValueError("n must be nonnegative")
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    if n == 0 or eps == 0:
        return PropagatorNorm.from_log(0.0, n, None, "noisy", "classical")
    Finv = F.inverse
    if kernel.is_gaussian:
        ext = min_orbit_extension(F, n - 1, radius=R, variant="sum")
        k = tuple(int(x) for x in Finv @ np.array(ext.argmin))
        return PropagatorNorm.from_log(-eps * eps * ext.value, n, k, "noisy", "classical",
                                       orbit_value=ext.value, radius=ext.radius)
    best, j, radius, ok = _general_search(F, kernel, eps, range(n), R)
    k = tuple(int(x) for x in Finv @ np.array(j))
    return PropagatorNorm.from_log(best, n, k, "noisy", "classical", radius=radius, certified=ok)


def classical_norm_coarse_linear(F, kernel, eps, n, R=1):
    """max_{k != 0} |ghat(eps k) ghat(eps F^n k)| for a linear automorphism F."""
    F = SymplecticIntMatrix.coerce(F)
    if n < 0:
        raise ValueError("n must be nonnegative")
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    if eps == 0:
        return PropagatorNorm.from_log(0.0, n, None, "coarse", "classical")
    if kernel.is_gaussian:
        ext = min_orbit_extension(F, n, radius=R, variant="endpoint")
        return PropagatorNorm.from_log(-eps * eps * ext.value, n, ext.argmin, "coarse", "classical",
                                       orbit_value=ext.value, radius=ext.radius)
    best, k, radius, ok = _general_search(F, kernel, eps, (0, n), R)
    return PropagatorNorm.from_log(best, n, k, "coarse", "classical", radius=radius, certified=ok)


# correlations ----------------------------------------------------------


def _overlap(a, b):
    """<a, b> for two Fourier series."""
    if not len(a.keys) or not len(b.keys):
        return 0j
    _, inv = unique_rows(np.concatenate([a.keys, b.keys]))
    ia, ib = inv[: len(a.keys)], inv[len(a.keys):]
    slots = np.zeros(inv.max() + 1, dtype=complex)
    slots[ia] = np.conj(a.values)
    return complex((slots[ib] * b.values).sum())


def _spectral_ok(spec):
    return spec.kick is None or (spec.dim_d == 1 and spec.kick_kind in ("q", "p"))


def correlation(spec, j, k, n, method="auto"):
    """<w_j, w_k o Phi^n>.

    The exact route pushes w_j backward and w_k forward by about n/2 steps
    each and takes the overlap, which keeps the number of modes manageable.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    if method == "auto":
        method = "spectral" if _spectral_ok(spec) else "quadrature"
    if method == "quadrature":
        f, _ = compose_series(spec, FourierSeries.mode(k), n, method="quadrature")
        return f.coefficient(j)
    back, fwd = FourierSeries.mode(j), FourierSeries.mode(k)
    for _ in range(n // 2):
        back, _ = koopman_adjoint_step(spec, back)
    for _ in range(n - n // 2):
        fwd, _ = koopman_step(spec, fwd)
    return _overlap(back, fwd)


def mixing_rate(spec, j, k, n_max, floor=1e-12):
    """Fitted exponential decay rate of |<w_j, w_k o Phi^n>| for n = 1..n_max.

    Returns (rate, intercept, r2) of a least-squares line through
    ln|corr| against n; values below ``floor`` are left out.
    """
    back, fwd = [FourierSeries.mode(j)], [FourierSeries.mode(k)]
    for _ in range(n_max // 2):
        back.append(koopman_adjoint_step(spec, back[-1])[0])
    for _ in range(n_max - n_max // 2):
        fwd.append(koopman_step(spec, fwd[-1])[0])
    ns, logs = [], []
    for n in range(1, n_max + 1):
        c = abs(_overlap(back[n // 2], fwd[n - n // 2]))
        if c > floor:
            ns.append(n)
            logs.append(np.log(c))
    if len(ns) < 2:
        raise ValueError("too few correlation values above the floor to fit")
    slope, intercept = np.polyfit(ns, logs, 1)
    pred = slope * np.asarray(ns) + intercept
    ss = ((np.asarray(logs) - np.mean(logs)) ** 2).sum()
    r2 = 1.0 - ((np.asarray(logs) - pred) ** 2).sum() / ss if ss > 0 else 1.0
    return float(-slope), float(intercept), float(r2)
