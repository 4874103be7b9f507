"""Quantum torus: Bloch angles, Weyl matrices and Weyl quantisation.

With N states per degree of freedom (hbar = 1/(2 pi N)) and Bloch angle
theta, the Weyl modes W_k quantise w_k and satisfy

    W_k W_m = exp(pi i k^m / N) W_{k+m},
    W_{k+N m} = exp(2 pi i alpha(k, m, theta)) W_k,
    alpha = k^m / 2 + (N/2) m_q . m_p + m^theta.

Operators are stored either densely (N x N, one degree of freedom) or by
their coefficients a_k on the fundamental domain (-N/2, N/2]^{2d}, held in
an array indexed by k mod N.  The basis is orthonormal for
<A, B> = N^{-d} Tr(A* B).
"""

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
import sympy

from .lattice import SymplecticIntMatrix, fold, wedge
from .series import FourierSeries


@dataclass(frozen=True)
class QuantumSetting:
    """Hilbert space H_N(theta) of dimension N^d."""

    N: int
    dim_d: int = 1
    theta: tuple = None

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be positive")
        theta = (0.0,) * (2 * self.dim_d) if self.theta is None else tuple(float(t) % 1.0 for t in self.theta)
        if len(theta) != 2 * self.dim_d:
            raise ValueError("theta must have 2d components")
        object.__setattr__(self, "theta", theta)

    @property
    def hbar(self):
        return 1.0 / (2 * np.pi * self.N)

    @property
    def shape(self):
        """Shape of a coefficient array."""
        return (self.N,) * (2 * self.dim_d)

    def domain(self):
        """Folded labels of all coefficient slots, shape shape + (2d,)."""
        idx = np.indices(self.shape)
        return np.moveaxis(fold(idx, self.N), 0, -1)


def map_contraction(F):
    """The integer vector (A.B, C.D) of entrywise row products of F's blocks."""
    F = SymplecticIntMatrix.coerce(F)
    d = F.dim_d
    M = F.matrix
    A, B, C, D = M[:d, :d], M[:d, d:], M[d:, :d], M[d:, d:]
    return np.concatenate([(A * B).sum(1), (C * D).sum(1)])


def is_admissible(F, N, theta, tol=1e-9):
    """Check (N/2)(A.B, C.D) + F theta - theta is an integer vector."""
    F = SymplecticIntMatrix.coerce(F)
    theta = np.asarray(theta, dtype=float)
    r = 0.5 * N * map_contraction(F) + F.matrix.dot(theta) - theta
    return bool(np.all(np.abs(r - np.round(r)) < tol))


def _frac_solve(M, b):
    # exact Gaussian elimination over the rationals
    n = len(b)
    A = [[Fraction(int(x)) for x in row] + [Fraction(v)] for row, v in zip(M, b)]
    for c in range(n):
        piv = next(r for r in range(c, n) if A[r][c] != 0)
        A[c], A[piv] = A[piv], A[c]
        for r in range(n):
            if r != c and A[r][c] != 0:
                f = A[r][c] / A[c][c]
                A[r] = [x - f * y for x, y in zip(A[r], A[c])]
    return [A[i][n] / A[i][i] for i in range(n)]


def admissible_angles(F, N):
    """All Bloch angles theta in [0,1)^{2d} compatible with quantising F.

    When F - I is invertible there are |det(F - I)| of them; theta = 0 comes
    first when admissible.  For singular F - I only theta = 0 is returned,
    and only if it is admissible; otherwise a ValueError is raised.
    """
    F = SymplecticIntMatrix.coerce(F)
    dim = 2 * F.dim_d
    shift = [Fraction(int(N) * int(c), 2) for c in map_contraction(F)]
    FI = F.matrix - np.eye(dim, dtype=np.int64)
    det = int(sympy.Matrix(FI.tolist()).det())
    if det == 0:
        if all(s.denominator == 1 for s in shift):
            return [(0.0,) * dim]
        raise ValueError("F - I is singular and theta = 0 is not admissible")
    base = [x % 1 for x in _frac_solve(FI, [-s for s in shift])]
    gens = [tuple(x % 1 for x in _frac_solve(FI, list(np.eye(dim, dtype=int)[i]))) for i in range(dim)]
    # the solution set is base + the group generated by the columns of (F-I)^{-1}
    seen = {tuple([Fraction(0)] * dim)}
    frontier = list(seen)
    while frontier:
        nxt = []
        for g in frontier:
            for h in gens:
                s = tuple((a + b) % 1 for a, b in zip(g, h))
                if s not in seen:
                    seen.add(s)
                    nxt.append(s)
        frontier = nxt
    sols = sorted(tuple((b + g) % 1 for b, g in zip(base, grp)) for grp in seen)
    return [tuple(float(x) for x in s) for s in sols]


def fold_phase(k, m, theta, N):
    """alpha(k, m, theta) mod 1 with W_{k+Nm} = exp(2 pi i alpha) W_k."""
    k = np.asarray(k, dtype=np.int64)
    m = np.asarray(m, dtype=np.int64)
    d = k.shape[-1] // 2
    theta = np.asarray(theta, dtype=float)
    half_km = np.mod(np.asarray(wedge(k, m)), 2) / 2.0
    qp = np.mod(N * (m[..., :d] * m[..., d:]).sum(-1), 2) / 2.0
    mt = wedge(m.astype(float), theta)
    return np.mod(half_km + qp + mt, 1.0)


def _require_d1(setting):
    if setting.dim_d != 1:
        raise ValueError("dense quantum paths support one degree of freedom only")


def weyl_matrix(k, setting):
    """Dense W_k on H_N(theta), basis concentrated at q_j = (j + theta_q)/N."""
    _require_d1(setting)
    N = setting.N
    tq, tp = setting.theta
    kq, kp = (int(x) for x in k)
    l = np.arange(N)
    t = l - kq
    j = np.mod(t, N)
    s = (t - j) // N
    # phases reduced mod 1 in exact integer parts to keep precision
    ph = np.mod(kp * l, N) / N + kp * tq / N - np.mod(kp * kq, 2 * N) / (2 * N) + tp * s
    W = np.zeros((N, N), dtype=complex)
    W[l, j] = np.exp(2j * np.pi * ph)
    return W


@lru_cache(maxsize=8)
def _codec(setting):
    """Phase tensor P[iq, ip, l] = (W_k)_{l, (l - k_q) mod N} and column map."""
    N = setting.N
    tq, tp = setting.theta
    i = np.arange(N)
    kf = fold(i, N)
    kq = kf[:, None, None]
    kp = kf[None, :, None]
    l = i[None, None, :]
    t = l - kq
    s = (t - np.mod(t, N)) // N
    ph = np.mod(kp * l, N) / N + kp * tq / N - np.mod(kp * kq, 2 * N) / (2 * N) + tp * s
    P = np.exp(2j * np.pi * ph)
    cols = np.mod(i[None, :] - kf[:, None], N)
    P.setflags(write=False)
    cols.setflags(write=False)
    return P, cols


def decode(coeffs, setting):
    """Dense operator sum_k a_k W_k; leading batch axes are allowed."""
    _require_d1(setting)
    N = setting.N
    P, cols = _codec(setting)
    a = np.asarray(coeffs)
    D = np.einsum("...qp,qpl->...ql", a, P)
    out = np.zeros(a.shape[:-2] + (N, N), dtype=complex)
    rows = np.broadcast_to(np.arange(N)[None, :], (N, N))
    out[..., rows, cols] = D
    return out


def encode(A, setting):
    """Coefficients a_k = N^{-1} Tr(W_k* A)."""
    _require_d1(setting)
    N = setting.N
    P, cols = _codec(setting)
    A = np.asarray(A)
    rows = np.broadcast_to(np.arange(N)[None, :], (N, N))
    G = A[..., rows, cols]
    return np.einsum("qpl,...ql->...qp", P.conj(), G) / N


def hs_inner(A, B, N, d=1):
    """Normalised Hilbert-Schmidt product N^{-d} Tr(A* B)."""
    return np.vdot(A, B) / N**d


def hs_norm(A, N, d=1):
    return float(np.sqrt(abs(hs_inner(A, A, N, d))))


def fold_series(f, setting):
    """Coefficient array of Op_N(f): every mode is folded with its phase."""
    f = FourierSeries.coerce(f, setting.dim_d)
    N = setting.N
    out = np.zeros(setting.shape, dtype=complex)
    if not len(f.keys):
        return out
    kf = fold(f.keys, N)
    m = (f.keys - kf) // N
    ph = np.exp(2j * np.pi * fold_phase(kf, m, setting.theta, N))
    np.add.at(out, tuple(np.mod(kf, N).T), f.values * ph)
    return out


def op_n(f, setting):
    """Weyl quantisation Op_N(f) = sum_k fhat(k) W_k as a dense matrix."""
    return decode(fold_series(f, setting), setting)


def nearest_lattice_shift(v, N):
    """[N v]: nearest integer vector, halves rounded up."""
    return np.floor(np.asarray(v, dtype=float) * N + 0.5).astype(np.int64)


def quantize_translation(v, setting):
    """Unitary W_{[Nv]} quantising the translation x -> x + v."""
    return weyl_matrix(nearest_lattice_shift(v, setting.N), setting)


def kick_propagator(H, setting, tol=1e-10):
    """exp(-2 pi i N Op_N(H)) for a real Hamiltonian H given as a Fourier series."""
    _require_d1(setting)
    A = op_n(H, setting)
    if np.abs(A - A.conj().T).max() > tol * max(1.0, np.abs(A).max()):
        raise ValueError("Op_N(H) is not Hermitian; H must be real-valued")
    A = 0.5 * (A + A.conj().T)
    vals, vecs = np.linalg.eigh(A)
    return (vecs * np.exp(-2j * np.pi * setting.N * vals)) @ vecs.conj().T


def linear_map_unitary(F, setting):
    """A dense unitary U with U* W_k U = W_{F^{-1} k}, found as a null vector.

    The intertwining relation is imposed for the two generators W_(1,0) and
    W_(0,1); U is unique up to a phase when theta is admissible.
    """
    _require_d1(setting)
    F = SymplecticIntMatrix.coerce(F)
    if not is_admissible(F, setting.N, setting.theta):
        raise ValueError("theta is not admissible for this map")
    N = setting.N
    Finv = F.inverse
    I = np.eye(N)
    blocks = []
    for e in ((1, 0), (0, 1)):
        Wk = weyl_matrix(e, setting)
        Wt = weyl_matrix(Finv.dot(e), setting)
        # W_k U - U W_t = 0 in row-major vec form
        blocks.append(np.kron(Wk, I) - np.kron(I, Wt.T))
    M = np.vstack(blocks)
    _, s, vh = np.linalg.svd(M)
    U = vh[-1].conj().reshape(N, N)
    if s[-1] > 1e-8 * max(1.0, s[0]) or (N > 1 and s[-2] < 1e-6):
        raise RuntimeError("intertwiner is not unique")
    return U * np.sqrt(N) / np.linalg.norm(U)
