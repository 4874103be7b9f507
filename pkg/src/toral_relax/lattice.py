"""Integer symplectic linear algebra on the Fourier lattice Z^{2d}.

Lattice vectors are stored in (q-block, p-block) order.  The wedge form is

    k ^ m = k_p . m_q - k_q . m_p = k^T J m,    J = [[0, -I], [I, 0]],

and the classical Fourier modes are w_k(x) = exp(2 pi i k ^ x).  Under this
convention cos(2 pi q) = (w_(0,1) + w_(0,-1)) / 2; use :func:`from_plain` to
turn an ordinary frequency vector n (with e^{2 pi i n.x}) into the label k.
"""

from dataclasses import dataclass
from functools import cached_property

import mpmath
import numpy as np
import sympy


def wedge_matrix(d):
    """The 2d x 2d matrix J with k ^ m = k^T J m."""
    eye = np.eye(d, dtype=np.int64)
    zero = np.zeros((d, d), dtype=np.int64)
    return np.block([[zero, -eye], [eye, zero]])


def wedge(k, m):
    """Symplectic pairing k ^ m; broadcasts over leading axes."""
    k = np.asarray(k)
    m = np.asarray(m)
    if k.shape[-1] != m.shape[-1] or k.shape[-1] % 2:
        raise ValueError("wedge needs vectors of equal even length")
    d = k.shape[-1] // 2
    out = (k[..., d:] * m[..., :d]).sum(-1) - (k[..., :d] * m[..., d:]).sum(-1)
    return out.item() if out.ndim == 0 else out


def from_plain(n):
    """Lattice label k with w_k(x) = exp(2 pi i n . x)."""
    n = np.asarray(n)
    d = n.shape[-1] // 2
    return np.concatenate([-n[..., d:], n[..., :d]], axis=-1)


def to_plain(k):
    """Inverse of :func:`from_plain`."""
    k = np.asarray(k)
    d = k.shape[-1] // 2
    return np.concatenate([k[..., d:], -k[..., :d]], axis=-1)


def _as_int_matrix(F):
    A = np.asarray(F)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("expected a square matrix")
    if A.shape[0] % 2:
        raise ValueError("matrix dimension must be even")
    rows = A.tolist()
    if any(x != int(x) for row in rows for x in row):
        raise ValueError("matrix entries must be integers")
    return np.array([[int(x) for x in row] for row in rows], dtype=object)


def check_symplectic(F):
    """True iff F^T J F = J in exact integer arithmetic."""
    A = _as_int_matrix(F)
    J = wedge_matrix(A.shape[0] // 2).astype(object)
    return bool(np.all(A.T.dot(J).dot(A) == J))


def _charpoly(A):
    x = sympy.Symbol("x")
    return sympy.Matrix(A.tolist()).charpoly(x)


def _root_of_unity_orders(degree):
    # every m with phi(m) <= degree; phi(m) >= sqrt(m/2) bounds the search
    return [m for m in range(1, 2 * degree * degree + 3) if sympy.totient(m) <= degree]


@dataclass(frozen=True)
class SymplecticIntMatrix:
    """Integer symplectic matrix F acting on the torus R^{2d}/Z^{2d}.

    ``blocks`` optionally lists the dimensions of the irreducible rational
    blocks; when omitted they are read off the factorisation of the
    characteristic polynomial.
    """

    entries: tuple
    blocks: tuple = None

    def __post_init__(self):
        A = _as_int_matrix(self.entries)
        object.__setattr__(self, "entries", tuple(tuple(int(x) for x in row) for row in A))
        if self.blocks is not None:
            object.__setattr__(self, "blocks", tuple(int(b) for b in self.blocks))
            if sum(self.blocks) != A.shape[0]:
                raise ValueError("block dimensions must sum to 2d")
        if not check_symplectic(A):
            raise ValueError("matrix is not symplectic")

    @classmethod
    def coerce(cls, F):
        return F if isinstance(F, cls) else cls(F)

    @property
    def dim_d(self):
        return len(self.entries) // 2

    @cached_property
    def matrix(self):
        M = np.array(self.entries, dtype=np.int64)
        M.setflags(write=False)
        return M

    @cached_property
    def exact(self):
        return np.array(self.entries, dtype=object)

    @cached_property
    def inverse(self):
        """F^{-1} = -J F^T J, exact."""
        J = wedge_matrix(self.dim_d).astype(object)
        inv = -J.dot(self.exact.T).dot(J)
        M = np.array(inv.tolist(), dtype=np.int64)
        M.setflags(write=False)
        return M

    @cached_property
    def charpoly(self):
        return _charpoly(self.exact)

    @cached_property
    def rational_factors(self):
        """[(coefficients, multiplicity)] of the irreducible factors over Q."""
        _, facs = sympy.factor_list(self.charpoly.as_expr(), self.charpoly.gen)
        out = []
        for f, e in facs:
            coeffs = [int(c) for c in sympy.Poly(f, self.charpoly.gen).all_coeffs()]
            out.append((tuple(coeffs), int(e)))
        return sorted(out, key=lambda t: (len(t[0]), t[0]))

    @cached_property
    def eigenvalues(self):
        vals = []
        for coeffs, mult in self.rational_factors:
            vals.extend(_poly_roots(coeffs) * mult)
        return np.array(vals, dtype=complex)

    @cached_property
    def norm_mu(self):
        """max(||F||, ||F^{-1}||) in the operator 2-norm."""
        return max(np.linalg.norm(self.matrix, 2), np.linalg.norm(self.inverse, 2))

    def power(self, n):
        """F^n as an exact object-dtype integer matrix (negative n allowed)."""
        base = self.exact if n >= 0 else np.array(self.inverse.tolist(), dtype=object)
        return _matpow(base, abs(n), None)

    def power_mod(self, n, N):
        """F^n mod N as an int64 matrix."""
        base = self.exact if n >= 0 else np.array(self.inverse.tolist(), dtype=object)
        return np.array(_matpow(base, abs(n), N).tolist(), dtype=np.int64)


def _matpow(A, n, N):
    dim = A.shape[0]
    result = np.array(np.eye(dim, dtype=np.int64).tolist(), dtype=object)
    base = A.copy()
    if N is not None:
        base = base % N
    while n:
        if n & 1:
            result = result.dot(base)
            if N is not None:
                result = result % N
        n >>= 1
        if n:
            base = base.dot(base)
            if N is not None:
                base = base % N
    return result


def _poly_roots(coeffs):
    if len(coeffs) == 2:
        return [complex(-coeffs[1] / coeffs[0])]
    roots = mpmath.polyroots(coeffs, maxsteps=200, extraprec=200)
    return [complex(r) for r in roots]


def check_ergodic(F):
    """True iff no eigenvalue of F is a root of unity (exact gcd test)."""
    F = SymplecticIntMatrix.coerce(F)
    x = F.charpoly.gen
    P = sympy.Poly(F.charpoly.as_expr(), x)
    for m in _root_of_unity_orders(2 * F.dim_d):
        cyc = sympy.Poly(sympy.cyclotomic_poly(m, x), x)
        if sympy.gcd(P, cyc).degree() > 0:
            return False
    return True


def fold(k, N):
    """Representative of k modulo N in (-N/2, N/2], componentwise."""
    if N < 1:
        raise ValueError("N must be positive")
    r = np.mod(np.asarray(k, dtype=np.int64), N)
    return np.where(2 * r > N, r - N, r)


def orbit_mod_N(F, k, N):
    """Cycle of k under the permutation x -> F x of (Z/N)^{2d}, folded."""
    F = SymplecticIntMatrix.coerce(F)
    start = tuple(int(x) for x in fold(k, N))
    if not any(start):
        raise ValueError("the zero mode is a fixed point; pass k != 0")
    M = F.matrix % N
    cycle = [start]
    cur = np.array(start, dtype=np.int64)
    while True:
        cur = fold(M.dot(cur), N)
        t = tuple(int(x) for x in cur)
        if t == start:
            return cycle
        cycle.append(t)


def canonical_tiebreak(points):
    """Pick one of several equally good lattice points deterministically.

    Each point is sign-normalised (first nonzero entry positive) and the
    lexicographically smallest result is returned.
    """
    best = None
    for p in points:
        p = tuple(int(x) for x in p)
        nz = next((x for x in p if x), 0)
        if nz < 0:
            p = tuple(-x for x in p)
        if best is None or p < best:
            best = p
    return best


@dataclass(frozen=True)
class OrbitExtension:
    value: int
    argmin: tuple
    variant: str
    n: int
    radius: int
    confirmed: bool


def _box_chunks(dim, R, chunk=1 << 20):
    """Yield integer points of the box |k|_inf <= R, in slabs along axis 0."""
    side = 2 * R + 1
    rest = side ** (dim - 1)
    step = max(1, chunk // max(rest, 1))
    axes = [np.arange(-R, R + 1, dtype=np.int64)] * (dim - 1)
    tail = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, dim - 1) if dim > 1 else None
    for lo in range(-R, R + 1, step):
        first = np.arange(lo, min(lo + step, R + 1), dtype=np.int64)
        if tail is None:
            yield first[:, None]
        else:
            pts = np.empty((first.size, rest, dim), dtype=np.int64)
            pts[:, :, 0] = first[:, None]
            pts[:, :, 1:] = tail[None]
            yield pts.reshape(-1, dim)


def _extension_terms(F, n, variant):
    if variant == "endpoint":
        return [F.power(0), F.power(n)]
    if variant == "sum":
        return [F.power(l) for l in range(n + 1)]
    raise ValueError("variant must be 'endpoint' or 'sum'")


def _exact_value(mats, k):
    k = np.array([int(x) for x in k], dtype=object)
    return int(sum(int((M.dot(k) ** 2).sum()) for M in mats))


def _search_box(mats, R, dim, budget):
    """All points of the box whose float value is within 1e-9 of the minimum.

    Points are dropped as soon as a partial sum exceeds ``budget`` (a value
    already attained), so only genuine contenders are returned.
    """
    int_mats = []
    for M in mats:
        rowsum = max(sum(abs(int(x)) for x in row) for row in M)
        small = rowsum * R < 2**62
        int_mats.append((np.array(M.tolist(), dtype=np.int64) if small else None, M))
    best = budget
    cands = []
    for pts in _box_chunks(dim, R):
        pts = pts[np.any(pts != 0, axis=1)]
        acc = np.zeros(len(pts))
        for M64, Mobj in int_mats:
            if not len(pts):
                break
            if M64 is not None:
                img = pts.dot(M64.T).astype(float)
            else:
                img = np.array(pts.astype(object).dot(Mobj.T), dtype=float)
            acc += (img * img).sum(1)
            keep = acc <= best * (1 + 1e-9)
            pts, acc = pts[keep], acc[keep]
        if not len(pts):
            continue
        best = min(best, acc.min())
        thresh = best * (1 + 1e-9)
        cands = [c for c in cands if c[0] <= thresh]
        cands.extend((a, tuple(int(x) for x in p)) for a, p in zip(acc, pts) if a <= thresh)
    return [c[1] for c in cands]


def _gram(mats):
    G = sum(M.T.dot(M) for M in mats)
    return [[int(x) for x in row] for row in G]


def _qf(G, v):
    return sum(G[i][j] * v[i] * v[j] for i in range(len(v)) for j in range(len(v)))


def _bf(G, u, v):
    return sum(G[i][j] * u[i] * v[j] for i in range(len(u)) for j in range(len(v)))


def _round_div(a, b):
    # nearest integer to a / b (b > 0), halves rounded down, exact
    return (2 * a + b) // (2 * b)


def _plane_shortest(G):
    """All shortest nonzero vectors of the form G on Z^2 (Lagrange-Gauss reduction).

    Exact in Python integers; in a reduced basis (b1, b2) every minimiser is
    one of +-b1, +-b2, +-(b1 - s b2).
    """
    b1, b2 = (1, 0), (0, 1)
    q1, q2 = _qf(G, b1), _qf(G, b2)
    if q1 > q2:
        b1, b2, q1, q2 = b2, b1, q2, q1
    while True:
        mu = _round_div(_bf(G, b1, b2), q1)
        b2 = (b2[0] - mu * b1[0], b2[1] - mu * b1[1])
        q2 = _qf(G, b2)
        if q2 >= q1:
            break
        b1, b2, q1, q2 = b2, b1, q2, q1
    best = [b1]
    if q2 == q1:
        best.append(b2)
        c = _bf(G, b1, b2)
        if 2 * abs(c) == q1:
            s = 1 if c > 0 else -1
            best.append((b1[0] - s * b2[0], b1[1] - s * b2[1]))
    return q1, best


def min_orbit_extension(F, n, radius=1, variant="endpoint", max_radius=4096):
    """Minimise an orbit-length quadratic form over nonzero integer vectors.

    ``endpoint``: |k|^2 + |F^n k|^2.  ``sum``: sum_{l=0}^{n} |F^l k|^2.
    For one degree of freedom the form is minimised exactly by lattice
    reduction (``radius`` then reports the size of the minimiser).  In
    higher dimension the box |k|_inf <= R is doubled until every point
    outside it provably exceeds the best value (the form dominates
    |k|^2 >= (R+1)^2).  Values are confirmed in exact integer arithmetic.
    """
    F = SymplecticIntMatrix.coerce(F)
    if n < 0:
        raise ValueError("n must be nonnegative")
    if radius < 1:
        raise ValueError("search radius must be at least 1")
    mats = _extension_terms(F, n, variant)
    dim = 2 * F.dim_d
    if dim == 2:
        value, pts = _plane_shortest(_gram(mats))
        arg = canonical_tiebreak(pts + [tuple(-x for x in p) for p in pts])
        return OrbitExtension(value, arg, variant, n, max(1, max(abs(x) for x in arg)), True)
    R = int(radius)
    best_val, best_pts = None, []
    while True:
        budget = np.inf if best_val is None else best_val * (1 + 1e-9)
        cands = _search_box(mats, R, dim, budget)
        for c in cands:
            v = _exact_value(mats, c)
            if best_val is None or v < best_val:
                best_val, best_pts = v, [c]
            elif v == best_val and c not in best_pts:
                best_pts.append(c)
        confirmed = (R + 1) ** 2 > best_val
        if confirmed or 2 * R > max_radius:
            return OrbitExtension(best_val, canonical_tiebreak(best_pts), variant, n, R, confirmed)
        R *= 2


@dataclass(frozen=True)
class EntropyData:
    block_entropies: tuple
    block_dims: tuple
    averaged: tuple
    min_averaged: float


def is_diagonalizable(F):
    """Exact test: the squarefree part of the characteristic polynomial kills F."""
    F = SymplecticIntMatrix.coerce(F)
    A = sympy.Matrix(F.exact.tolist())
    P = sympy.eye(A.shape[0])
    for coeffs, _ in F.rational_factors:
        Q = sympy.zeros(*A.shape)
        for c in coeffs:
            Q = Q * A + c * sympy.eye(A.shape[0])
        P = P * Q
    return P.is_zero_matrix


def ks_entropy(F, blocks=None):
    """Per-block K-S entropies h_j, their averages h_j/d_j and the minimum.

    Blocks are the irreducible rational factors of the characteristic
    polynomial.  Caller-supplied block dimensions are checked against them.
    """
    F = SymplecticIntMatrix.coerce(F)
    blocks = blocks if blocks is not None else F.blocks
    if not check_ergodic(F):
        raise ValueError("matrix has a root-of-unity eigenvalue")
    if not is_diagonalizable(F):
        raise ValueError("matrix is not diagonalizable")
    hs, dims = [], []
    for coeffs, mult in F.rational_factors:
        roots = _poly_roots(coeffs)
        h = float(sum(np.log(abs(r)) for r in roots if abs(r) > 1))
        hs.extend([h] * mult)
        dims.extend([len(coeffs) - 1] * mult)
    if blocks is not None and sorted(blocks) != sorted(dims):
        raise ValueError(f"block dimensions {list(blocks)} do not match rational factors {dims}")
    avg = tuple(h / dj for h, dj in zip(hs, dims))
    return EntropyData(tuple(hs), tuple(dims), avg, min(avg))


def direct_sum(*mats):
    """Symplectic direct sum: each d_j-dimensional factor keeps its own (q, p) pairing."""
    mats = [np.asarray(SymplecticIntMatrix.coerce(M).matrix) for M in mats]
    ds = [M.shape[0] // 2 for M in mats]
    d = sum(ds)
    out = np.zeros((2 * d, 2 * d), dtype=np.int64)
    off = 0
    for M, dj in zip(mats, ds):
        idx = np.r_[off:off + dj, d + off:d + off + dj]
        out[np.ix_(idx, idx)] = M
        off += dj
    return out
