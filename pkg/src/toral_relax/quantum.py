"""Quantum propagators acting on Weyl coefficient arrays, and their norms.

A superoperator here is anything with ``apply`` and ``adjoint`` acting on
coefficient arrays of shape setting.shape (extra leading axes allowed).  The
quantum map acts as A -> U* A U, so for a linear F the mode W_k goes to
W_{F^{-1} k}, folded back with its quasi-periodicity phase.
"""

from dataclasses import dataclass
from functools import cached_property
import warnings

import numpy as np
from scipy import sparse

from .classical import ClassicalMapSpec, compose_series, koopman_step
from .lattice import SymplecticIntMatrix, canonical_tiebreak, fold, min_orbit_extension, wedge
from .linalg import dense_norm, operator_norm
from .noise import _gaussian_log_axis, classical_eigenvalue, eigenvalue_table, log_eigenvalue_table
from .results import PropagatorNorm
from .series import FourierSeries
from .weyl import (
    QuantumSetting,
    decode,
    encode,
    fold_phase,
    fold_series,
    is_admissible,
    kick_propagator,
    nearest_lattice_shift,
)

DENSE_N_CAP = 128
# Gaussian exact norms switch from the whole-torus scan to the pruned search above this size
ORBIT_SCAN_LIMIT = 1 << 18
LEAKAGE_LIMIT = 1e-6


class LeakageWarning(UserWarning):
    """A classical evolution dropped more Fourier mass than the stated limit."""


def _flat(a, setting):
    return a.reshape(a.shape[: a.ndim - 2 * setting.dim_d] + (-1,))


@dataclass(frozen=True, eq=False)
class PhasedPermutation:
    """b[target[i]] = phase[i] * a[i] on flattened coefficient arrays."""

    setting: QuantumSetting
    target: np.ndarray
    phase: np.ndarray

    def apply(self, a):
        a = np.asarray(a, dtype=complex)
        fa = _flat(a, self.setting)
        out = np.empty_like(fa)
        out[..., self.target] = fa * self.phase
        return out.reshape(a.shape)

    def adjoint(self, b):
        b = np.asarray(b, dtype=complex)
        fb = _flat(b, self.setting)
        return (fb[..., self.target] * self.phase.conj()).reshape(b.shape)

    def matrix(self):
        n = self.target.size
        return sparse.csr_matrix((self.phase, (self.target, np.arange(n))), shape=(n, n))


@dataclass(frozen=True, eq=False)
class DiagonalSuper:
    """Multiplication of each coefficient a_k by diag[k]."""

    setting: QuantumSetting
    diag: np.ndarray

    def apply(self, a):
        return np.asarray(a) * self.diag

    def adjoint(self, a):
        return np.asarray(a) * np.conj(self.diag)

    def matrix(self):
        return sparse.diags(self.diag.ravel())


@dataclass(frozen=True, eq=False)
class UnitarySuper:
    """A -> U* A U in coefficient form (one degree of freedom)."""

    setting: QuantumSetting
    U: np.ndarray

    def apply(self, a):
        A = decode(a, self.setting)
        return encode(self.U.conj().T @ A @ self.U, self.setting)

    def adjoint(self, a):
        A = decode(a, self.setting)
        return encode(self.U @ A @ self.U.conj().T, self.setting)

    def matrix(self):
        n = self.setting.N ** 2
        basis = np.eye(n, dtype=complex).reshape((n,) + self.setting.shape)
        return self.apply(basis).reshape(n, n).T


@dataclass(frozen=True, eq=False)
class ComposedSuper:
    """Apply ``ops`` left to right."""

    setting: QuantumSetting
    ops: tuple

    def apply(self, a):
        for op in self.ops:
            a = op.apply(a)
        return a

    def adjoint(self, a):
        for op in reversed(self.ops):
            a = op.adjoint(a)
        return a

    def matrix(self):
        n = int(np.prod(self.setting.shape))
        basis = np.eye(n, dtype=complex).reshape((n,) + self.setting.shape)
        return self.apply(basis).reshape(n, n).T


def _require_admissible(F, setting):
    if not is_admissible(F, setting.N, setting.theta):
        raise ValueError(f"theta={setting.theta} is not admissible for this map at N={setting.N}")


def koopman_super_linear(F, setting):
    """Quantised Koopman operator of a linear automorphism: W_k -> W_{F^{-1} k}."""
    F = SymplecticIntMatrix.coerce(F)
    if F.dim_d != setting.dim_d:
        raise ValueError("map and setting dimensions differ")
    _require_admissible(F, setting)
    N = setting.N
    labels = setting.domain().reshape(-1, 2 * setting.dim_d)
    t = labels @ F.inverse.T
    ft = fold(t, N)
    m = (t - ft) // N
    phase = np.exp(2j * np.pi * fold_phase(ft, m, setting.theta, N))
    target = np.ravel_multi_index(tuple(np.mod(ft, N).T), setting.shape)
    return PhasedPermutation(setting, target, phase)


def translation_super(v, setting):
    """Conjugation by W_{[Nv]}: diagonal with entries exp(2 pi i k^m / N)."""
    m = nearest_lattice_shift(v, setting.N)
    labels = setting.domain()
    return DiagonalSuper(setting, np.exp(2j * np.pi * wedge(labels.astype(float), m.astype(float)) / setting.N))


def super_of_unitary(U, setting):
    return UnitarySuper(setting, np.asarray(U, dtype=complex))


def noise_super(kernel, eps, setting):
    """Quantum noise: diagonal in the Weyl basis with entries gamma_{eps,N}(k)."""
    return DiagonalSuper(setting, eigenvalue_table(kernel, eps, setting.N).astype(complex))


def map_super(spec, setting):
    """A -> U(Phi)* A U(Phi): linear part first, then translation, then kick."""
    spec = spec if isinstance(spec, ClassicalMapSpec) else ClassicalMapSpec(spec)
    ops = [koopman_super_linear(spec.linear_part, setting)]
    if any(spec.translation):
        ops.append(translation_super(spec.translation, setting))
    if spec.kick is not None:
        ops.append(super_of_unitary(kick_propagator(spec.kick_series, setting), setting))
    return ComposedSuper(setting, tuple(ops))


def noise_channel_dense(weights, setting):
    """Explicit channel A -> sum_n w(n) W_n* A W_n as an N^2 x N^2 coefficient matrix.

    ``weights`` is indexed by residues n mod N.  Used to cross-check the
    diagonal form of the noise.
    """
    from .weyl import weyl_matrix

    N = setting.N
    n_basis = N * N
    basis = np.eye(n_basis, dtype=complex).reshape((n_basis,) + setting.shape)
    A = decode(basis, setting)
    out = np.zeros_like(A)
    for idx in np.ndindex(*setting.shape):
        w = weights[idx]
        if w == 0:
            continue
        W = weyl_matrix(fold(np.array(idx), N), setting)
        out += w * (W.conj().T @ A @ W)
    return encode(out, setting).reshape(n_basis, n_basis).T


# exact norms for linear maps ------------------------------------------


def _tiebreak(labels, values, best):
    tol = 1e-12 * max(1.0, abs(best))
    hit = labels[values >= best - tol]
    return canonical_tiebreak(hit)


class LinearNormOracle:
    """Exact noisy and coarse-grained norms for a linear map.

        noisy:  ||T^n||      = max_{k != 0} prod_{l=1}^n |gamma(F^l k)|
        coarse: ||T~^{(n)}|| = max_{k != 0} |gamma(k) gamma(F^n k)|

    Small tori are scanned whole: window sums of log|gamma| along F are
    built by binary lifting (S_{a+b}(k) = S_a(k) + S_b(F^a k)), so any n
    costs O(N^{2d} log n).  For large Gaussian tori the maximiser is found
    by a pruned search: every factor is at most one, so only k with
    log gamma(k) above a known attained value can win.
    """

    def __init__(self, F, kernel, eps, setting, method="auto"):
        self.F = SymplecticIntMatrix.coerce(F)
        if self.F.dim_d != setting.dim_d:
            raise ValueError("map and setting dimensions differ")
        _require_admissible(self.F, setting)
        if eps < 0:
            raise ValueError("eps must be nonnegative")
        self.kernel = kernel
        self.eps = float(eps)
        self.setting = setting
        size = setting.N ** (2 * setting.dim_d)
        if method == "auto":
            method = "pruned" if kernel.is_gaussian and eps > 0 and size > ORBIT_SCAN_LIMIT else "scan"
        if method == "pruned" and not (kernel.is_gaussian and eps > 0):
            raise ValueError("the pruned search needs Gaussian noise")
        self.method = method
        self._levels = []

    # whole-torus scan

    @cached_property
    def _logt(self):
        return log_eigenvalue_table(self.kernel, self.eps, self.setting.N).ravel()

    @cached_property
    def _labels(self):
        return self.setting.domain().reshape(-1, 2 * self.setting.dim_d)

    @cached_property
    def _step(self):
        N = self.setting.N
        img = np.mod(self._labels @ self.F.matrix.T, N)
        dtype = np.int32 if img.size < 2**31 else np.int64
        return np.ravel_multi_index(tuple(img.T), self.setting.shape).astype(dtype)

    def _level(self, j):
        if not self._levels:
            self._levels.append((self._step, self._logt[self._step]))
        while len(self._levels) <= j:
            P, S = self._levels[-1]
            self._levels.append((P[P], S + S[P]))
        return self._levels[j]

    def _power(self, n):
        P = np.arange(self._step.size, dtype=self._step.dtype)
        for j in range(max(n.bit_length(), 0)):
            if n >> j & 1:
                P = self._level(j)[0][P]
        return P

    def window_logs(self, n):
        """sum_{l=1}^n log|gamma(F^l k)| for every slot k."""
        S = np.zeros(self._step.size)
        P = np.arange(self._step.size, dtype=self._step.dtype)
        for j in range(n.bit_length()):
            if n >> j & 1:
                Pj, Sj = self._level(j)
                S = S + Sj[P]
                P = Pj[P]
        return S

    def _result(self, values, n, flavor, **info):
        vals = values[1:]
        best = float(vals.max())
        k = _tiebreak(self._labels[1:], vals, best) if np.isfinite(best) else None
        return PropagatorNorm.from_log(best, n, k, flavor, "quantum", method=self.method, **info)

    # pruned search (Gaussian)

    @cached_property
    def _axis(self):
        return _gaussian_log_axis(self.eps, self.setting.N)

    def _logg(self, pts):
        return self._axis[np.mod(pts, self.setting.N)].sum(-1)

    def _disk(self, threshold, budget=60_000_000):
        """All nonzero folded k with log gamma(k) >= threshold."""
        N = self.setting.N
        dim = 2 * self.setting.dim_d
        ok = np.flatnonzero(self._axis >= threshold - 1e-12)
        vals = fold(ok, N)
        if float(len(vals)) ** dim > budget:
            raise MemoryError("pruned search region too large; raise the floor or use the scan")
        grids = np.meshgrid(*([vals] * dim), indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=1)
        pts = pts[np.any(pts != 0, axis=1)]
        return pts[self._logg(pts) >= threshold - 1e-12]

    def _seeds(self, n, variant):
        # small labels plus the classical optimiser, which is close to the
        # quantum one once eps N is large
        dim = 2 * self.setting.dim_d
        seeds = np.stack(np.meshgrid(*([np.arange(-2, 3)] * dim), indexing="ij"), -1).reshape(-1, dim)
        seeds = seeds[np.any(seeds != 0, axis=1)]
        try:
            ext = min_orbit_extension(self.F, n, variant=variant, max_radius=256)
            seeds = np.vstack([seeds, np.asarray(ext.argmin, dtype=np.int64)[None]])
        except (ValueError, RuntimeError):
            pass
        return seeds

    def _pruned(self, n, floor, total, steps, seeds):
        """Maximise ``total`` over nonzero labels.

        ``steps(pts, thr)`` evaluates the factors one by one, dropping points
        once their partial sum falls below thr.  Thresholds are tried from
        -0.5 downward; a pass is conclusive as soon as something survives.
        """
        best = float(total(seeds).max())
        lower = best if floor is None else max(best, floor)
        thr = max(-0.5, lower)
        while True:
            pts, vals = steps(self._disk(thr), thr)
            if len(vals):
                return pts, vals
            if thr <= lower:
                return None, best
            thr = max(4 * thr, lower)

    def _pruned_noisy(self, n, floor):
        N = self.setting.N
        Fm = np.mod(self.F.matrix, N)

        def total(pts):
            acc = np.zeros(len(pts))
            j = pts
            for _ in range(n):
                acc += self._logg(j)
                j = np.mod(j @ Fm.T, N)
            return acc

        def steps(pts, thr):
            acc = np.zeros(len(pts))
            j = pts
            for l in range(n):
                acc += self._logg(j)
                keep = acc >= thr - 1e-12
                pts, j, acc = pts[keep], j[keep], acc[keep]
                if l < n - 1:
                    j = np.mod(j @ Fm.T, N)
            return pts, acc

        # search over j = F k, factors l = 0..n-1
        pts, acc = self._pruned(n, floor, total, steps, self._seeds(n - 1, "sum"))
        if pts is None:
            return self._bounded(acc, floor, n, "noisy")
        top = float(acc.max())
        ks = fold(pts @ self.F.inverse.T, N)
        return PropagatorNorm.from_log(top, n, _tiebreak(ks, acc, top), "noisy", "quantum", method="pruned")

    def _pruned_coarse(self, n, floor):
        N = self.setting.N
        Fn = self.F.power_mod(n, N)

        def total(pts):
            return self._logg(pts) + self._logg(np.mod(pts @ Fn.T, N))

        def steps(pts, thr):
            vals = total(pts)
            keep = vals >= thr - 1e-12
            return pts[keep], vals[keep]

        pts, vals = self._pruned(n, floor, total, steps, self._seeds(n, "endpoint"))
        if pts is None:
            return self._bounded(vals, floor, n, "coarse")
        top = float(vals.max())
        return PropagatorNorm.from_log(top, n, _tiebreak(pts, vals, top), "coarse", "quantum", method="pruned")

    def _bounded(self, lower, upper, n, flavor):
        # everything fell below the floor: the norm lies in [lower, upper)
        return PropagatorNorm.from_log(lower, n, None, flavor, "quantum", method="pruned",
                                       exact=False, upper_log=upper)

    # public

    def noisy(self, n, floor=None):
        """Norm of T^n.  With ``floor`` (a log value) the search may stop once
        the norm is known to lie below it; the result is then flagged inexact."""
        if n < 0:
            raise ValueError("n must be nonnegative")
        if n == 0 or self.eps == 0:
            return PropagatorNorm.from_log(0.0, n, None, "noisy", "quantum", method=self.method)
        if self.method == "pruned":
            return self._pruned_noisy(n, floor)
        # S_n(k) sums over F k .. F^n k, so its maximiser is the starting label
        return self._result(self.window_logs(n), n, "noisy")

    def coarse(self, n, floor=None):
        if n < 0:
            raise ValueError("n must be nonnegative")
        if self.eps == 0:
            return PropagatorNorm.from_log(0.0, n, None, "coarse", "quantum", method=self.method)
        if self.method == "pruned":
            return self._pruned_coarse(n, floor)
        L = self._logt
        return self._result(L + L[self._power(n)], n, "coarse")


    def coarse_first_below(self, cap, threshold=-1.0):
        """Smallest n in 1..cap whose coarse log-norm is below ``threshold``.

        Only labels with log gamma(k) >= threshold can keep the product
        above it, so those are pushed forward one step at a time.  Returns
        None when no n up to cap qualifies.
        """
        if self.eps == 0:
            return None
        N = self.setting.N
        if self.method == "scan":
            L = self._logt
            P = np.arange(self._step.size, dtype=self._step.dtype)
            for n in range(1, cap + 1):
                P = self._step[P]
                if (L[1:] + L[P[1:]]).max() < threshold:
                    return n
            return None
        pts = self._disk(threshold)
        base = self._logg(pts)
        Fm = np.mod(self.F.matrix, N)
        j = pts
        for n in range(1, cap + 1):
            j = np.mod(j @ Fm.T, N)
            if not len(pts) or (base + self._logg(j)).max() < threshold:
                return n
        return None


def noisy_norm_linear(F, kernel, eps, setting, n, method="auto"):
    """||T^n|| for a linear map, exact: max_{k != 0} prod_{l=1}^n |gamma(F^l k)|."""
    return LinearNormOracle(F, kernel, eps, setting, method).noisy(n)


def coarse_norm_linear(F, kernel, eps, setting, n, method="auto"):
    """Coarse-grained norm max_{k != 0} |gamma(k) gamma(F^n k)|, exact."""
    return LinearNormOracle(F, kernel, eps, setting, method).coarse(n)


# dense norms for general maps ------------------------------------------


class DenseNormOracle:
    """Norms of (G U)^n or G U^n G on trace-free operators, U any quantised map.

    Up to ``dense_cap`` coefficients the one-step matrix is formed and
    powered explicitly (LAPACK SVD); larger problems run a seeded Lanczos
    bidiagonalisation on the matrix-free action.
    """

    def __init__(self, spec, kernel, eps, setting, dense_cap=1500, cap_N=DENSE_N_CAP, tol=1e-12):
        if setting.dim_d != 1:
            raise ValueError("dense norms need one degree of freedom")
        if setting.N > cap_N:
            raise ValueError(f"N={setting.N} exceeds the dense cap {cap_N}")
        self.spec = spec if isinstance(spec, ClassicalMapSpec) else ClassicalMapSpec(spec)
        self.setting = setting
        self.U = map_super(self.spec, setting)
        self.gamma = eigenvalue_table(kernel, eps, setting.N).astype(complex)
        self.dim = setting.N**2 - 1
        self.explicit = self.dim <= dense_cap
        self.tol = tol
        self._noisy_powers = {}
        self._map_powers = {}

    @cached_property
    def _U_mat(self):
        return self.U.matrix()[1:, 1:]

    @cached_property
    def _T_mat(self):
        return self.gamma.ravel()[1:, None] * self._U_mat

    def _mat_power(self, cache, base, n):
        if n == 0:
            return np.eye(self.dim, dtype=complex)
        if n not in cache:
            done = max((m for m in cache if m < n), default=0)
            M = cache[done] if done else np.eye(self.dim, dtype=complex)
            for m in range(done + 1, n + 1):
                M = base @ M
                cache[m] = M
        return cache[n]

    def _embed(self, v):
        a = np.zeros(self.setting.N**2, dtype=complex)
        a[1:] = v
        return a.reshape(self.setting.shape)

    def norm(self, n, flavor="noisy"):
        if n < 0:
            raise ValueError("n must be nonnegative")
        g = self.gamma.ravel()[1:]
        if flavor == "noisy" and n == 0:
            return PropagatorNorm.from_value(1.0, 0, None, "noisy", "quantum", method="dense")
        if self.explicit:
            if flavor == "noisy":
                M = self._mat_power(self._noisy_powers, self._T_mat, n)
            else:
                M = g[:, None] * self._mat_power(self._map_powers, self._U_mat, n) * g[None, :]
            return PropagatorNorm.from_value(min(dense_norm(M), 1.0), n, None, flavor, "quantum", method="dense")
        gam = self.gamma

        if flavor == "noisy":

            def mv(v):
                a = self._embed(v)
                for _ in range(n):
                    a = gam * self.U.apply(a)
                return a.ravel()[1:]

            def rmv(v):
                a = self._embed(v)
                for _ in range(n):
                    a = self.U.adjoint(np.conj(gam) * a)
                return a.ravel()[1:]
        else:

            def mv(v):
                a = gam * self._embed(v)
                for _ in range(n):
                    a = self.U.apply(a)
                return (gam * a).ravel()[1:]

            def rmv(v):
                a = np.conj(gam) * self._embed(v)
                for _ in range(n):
                    a = self.U.adjoint(a)
                return (np.conj(gam) * a).ravel()[1:]

        sigma, resid = operator_norm(mv, rmv, self.dim, tol=self.tol, dense_cap=0)
        return PropagatorNorm.from_value(min(sigma, 1.0), n, None, flavor, "quantum", method="lanczos", residual=resid)


def noisy_norm_dense(spec, kernel, eps, setting, n, flavor="noisy", **kw):
    """Largest singular value of T^n (or G U^n G) on trace-free operators."""
    return DenseNormOracle(spec, kernel, eps, setting, **kw).norm(n, flavor)


# Egorov discrepancies ---------------------------------------------------


def _classical_noisy(spec, kernel, eps, f, n, drop=1e-15):
    """T_eps^n f = (G K_Phi)^n f as a Fourier series, with dropped mass."""
    f = FourierSeries.coerce(f, spec.dim_d)
    lost = 0.0

    def noise(g):
        vals = g.values * classical_eigenvalue(kernel, eps, g.keys)
        small = np.abs(vals) <= drop
        return FourierSeries(g.keys[~small], vals[~small]), float(np.sqrt((np.abs(vals[small]) ** 2).sum()))

    if n == 0:
        return noise(f)
    for _ in range(n):
        f, dl = koopman_step(spec, f)
        f, dn = noise(f)
        lost = float(np.sqrt(lost**2 + dl**2 + dn**2))
    return f, lost


def _flag(lost):
    if lost > LEAKAGE_LIMIT:
        warnings.warn(f"classical evolution dropped L2 mass {lost:.2e}", LeakageWarning, stacklevel=3)


def egorov_discrepancy(spec, f, n, setting):
    """||U^n* Op(f) U^n - Op(f o Phi^n)||_HS (normalised trace)."""
    spec = spec if isinstance(spec, ClassicalMapSpec) else ClassicalMapSpec(spec)
    f = FourierSeries.coerce(f, setting.dim_d)
    if n < 0:
        raise ValueError("n must be nonnegative")
    if spec.kick is None:
        shift = np.asarray(spec.translation) * setting.N
        if np.allclose(shift, np.round(shift), atol=1e-12, rtol=0):
            # linear maps and lattice translations are quantised exactly
            _require_admissible(spec.linear_part, setting)
            return 0.0
    a = fold_series(f, setting)
    U = map_super(spec, setting)
    for _ in range(n):
        a = U.apply(a)
    g, lost = compose_series(spec, f, n)
    _flag(lost)
    return float(np.linalg.norm(a - fold_series(g, setting)))


def egorov_noisy_discrepancy(spec, kernel, eps, f, n, setting):
    """||T_{eps,N}^n Op(f) - Op(T_eps^n f)||_HS; n = 0 compares one noise step."""
    spec = spec if isinstance(spec, ClassicalMapSpec) else ClassicalMapSpec(spec)
    f = FourierSeries.coerce(f, setting.dim_d)
    if n < 0:
        raise ValueError("n must be nonnegative")
    gam = eigenvalue_table(kernel, eps, setting.N)
    a = fold_series(f, setting)
    if n == 0:
        a = gam * a
    else:
        U = map_super(spec, setting)
        for _ in range(n):
            a = gam * U.apply(a)
    g, lost = _classical_noisy(spec, kernel, eps, f, n)
    _flag(lost)
    return float(np.linalg.norm(a - fold_series(g, setting)))
