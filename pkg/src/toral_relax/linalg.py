"""Spectral norms of matrices and matrix-free operators."""

import numpy as np
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, svds

from .results import ConvergenceError


def dense_norm(M):
    """Largest singular value of an explicit matrix (LAPACK)."""
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))


def power_iteration(matvec, rmatvec, dim, tol=1e-8, maxiter=5000, seed=0, dtype=complex):
    """Largest singular value by power iteration on A* A.

    Returns (sigma, residual, iterations) where residual = |A*A v - s^2 v|/s^2.
    Raises ConvergenceError when the Ritz value stalls above tolerance.
    """
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(dim)
    if np.issubdtype(dtype, np.complexfloating):
        v = v + 1j * rng.standard_normal(dim)
    v /= np.linalg.norm(v)
    prev = 0.0
    for it in range(1, maxiter + 1):
        w = rmatvec(matvec(v))
        lam = float(np.real(np.vdot(v, w)))
        nw = np.linalg.norm(w)
        if nw == 0:
            return 0.0, 0.0, it
        resid = float(np.linalg.norm(w - lam * v) / max(lam, 1e-300))
        if it > 1 and abs(lam - prev) <= tol * lam and resid < np.sqrt(tol):
            return float(np.sqrt(lam)), resid, it
        prev = lam
        v = w / nw
    raise ConvergenceError(f"power iteration stalled (Ritz residual {resid:.2e})", resid)


def operator_norm(matvec, rmatvec, dim, tol=1e-10, seed=0, dtype=complex, dense_cap=1500):
    """Largest singular value of a linear operator given by its actions.

    Small operators are materialised and handed to LAPACK; larger ones use
    ARPACK (implicitly restarted Lanczos) on a LinearOperator with a seeded
    start vector.  Returns (sigma, residual).
    """
    if dim == 0:
        return 0.0, 0.0
    if dim <= dense_cap:
        M = np.empty((dim, dim), dtype=dtype)
        e = np.zeros(dim, dtype=dtype)
        for i in range(dim):
            e[i] = 1
            M[:, i] = matvec(e)
            e[i] = 0
        return dense_norm(M), 0.0
    op = LinearOperator(
        (dim, dim),
        matvec=lambda v: matvec(np.ravel(v)),
        rmatvec=lambda v: rmatvec(np.ravel(v)),
        dtype=dtype,
    )
    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(dim)
    try:
        u, s, vh = svds(op, k=1, tol=tol, v0=v0, maxiter=20 * dim)
    except ArpackNoConvergence as exc:
        raise ConvergenceError("Lanczos iteration did not converge") from exc
    sigma = float(s[0])
    resid = float(np.linalg.norm(matvec(vh[0].conj()) - sigma * u[:, 0]))
    return sigma, resid
