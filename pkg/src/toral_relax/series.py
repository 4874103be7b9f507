"""Finite Fourier series on the torus in the mode basis w_k(x) = exp(2 pi i k^x)."""

from dataclasses import dataclass

import numpy as np

from .lattice import wedge


def unique_rows(keys):
    """Unique integer rows and the inverse map, via packing into scalars when possible."""
    keys = np.asarray(keys, dtype=np.int64)
    if not len(keys):
        return keys, np.zeros(0, dtype=np.int64)
    lo = keys.min(0)
    span = keys.max(0) - lo + 1
    if np.prod(span.astype(float)) < 2.0**62:
        flat = np.ravel_multi_index(tuple((keys - lo).T), tuple(int(x) for x in span))
        u, inv = np.unique(flat, return_inverse=True)
        uniq = np.stack(np.unravel_index(u, tuple(int(x) for x in span)), axis=1) + lo
        return uniq.astype(np.int64), inv.ravel()
    uniq, inv = np.unique(keys, axis=0, return_inverse=True)
    return uniq, inv.ravel()


@dataclass(frozen=True)
class FourierSeries:
    """f(x) = sum_i values[i] * w_{keys[i]}(x), keys of shape (M, 2d)."""

    keys: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        keys = np.asarray(self.keys, dtype=np.int64)
        values = np.asarray(self.values, dtype=complex)
        if keys.ndim != 2 or keys.shape[1] % 2 or keys.shape[0] != values.shape[0]:
            raise ValueError("keys must be (M, 2d) and match values")
        object.__setattr__(self, "keys", keys)
        object.__setattr__(self, "values", values)

    @classmethod
    def coerce(cls, f, d=1):
        if isinstance(f, cls):
            return f
        if isinstance(f, dict):
            if not f:
                return cls(np.zeros((0, 2 * d), dtype=np.int64), np.zeros(0, dtype=complex))
            keys = np.array([tuple(k) for k in f], dtype=np.int64)
            return cls(keys, np.array(list(f.values()), dtype=complex))
        raise TypeError("expected a FourierSeries or a {mode: coefficient} mapping")

    @classmethod
    def mode(cls, k, c=1.0):
        return cls(np.array([k], dtype=np.int64), np.array([c], dtype=complex))

    @classmethod
    def cos_q(cls, amplitude=1.0, freq=1):
        """amplitude * cos(2 pi freq q) in one degree of freedom."""
        return cls(np.array([[0, freq], [0, -freq]]), np.array([amplitude / 2, amplitude / 2]))

    @classmethod
    def cos_p(cls, amplitude=1.0, freq=1):
        """amplitude * cos(2 pi freq p) in one degree of freedom."""
        return cls(np.array([[-freq, 0], [freq, 0]]), np.array([amplitude / 2, amplitude / 2]))

    @property
    def dim_d(self):
        return self.keys.shape[1] // 2

    def as_dict(self):
        out = {}
        for k, v in zip(self.keys, self.values):
            t = tuple(int(x) for x in k)
            out[t] = out.get(t, 0) + v
        return out

    def merged(self, drop=0.0):
        """Combine repeated keys and drop coefficients with |c| <= drop."""
        if not len(self.keys):
            return self
        uniq, inv = unique_rows(self.keys)
        vals = np.bincount(inv, self.values.real, len(uniq)) + 1j * np.bincount(inv, self.values.imag, len(uniq))
        keep = np.abs(vals) > drop
        return FourierSeries(uniq[keep], vals[keep])

    def norm(self):
        """L2 norm (the modes are orthonormal)."""
        return float(np.sqrt((np.abs(self.values) ** 2).sum()))

    def mean_free(self):
        keep = np.any(self.keys != 0, axis=1)
        return FourierSeries(self.keys[keep], self.values[keep])

    def coefficient(self, k):
        hit = np.all(self.keys == np.asarray(k), axis=1)
        return complex(self.values[hit].sum())

    def is_real(self, tol=1e-12):
        """True when c_{-k} = conj(c_k), i.e. f is real-valued."""
        table = self.as_dict()
        for k, v in table.items():
            partner = table.get(tuple(-x for x in k), 0)
            if abs(partner - np.conj(v)) > tol * max(1.0, abs(v)):
                return False
        return True

    def __call__(self, x):
        """Evaluate at points x of shape (..., 2d)."""
        x = np.asarray(x, dtype=float)
        phase = wedge(self.keys.astype(float), x[..., None, :])
        return (np.exp(2j * np.pi * phase) * self.values).sum(-1)

    def gradient(self, x):
        """(df/dq, df/dp) at points x, each of shape x.shape[:-1] + (d,)."""
        x = np.asarray(x, dtype=float)
        d = self.dim_d
        w = np.exp(2j * np.pi * wedge(self.keys.astype(float), x[..., None, :])) * self.values
        # d/dq of exp(2 pi i (k_p q - k_q p)) is 2 pi i k_p (...)
        dq = (2j * np.pi) * w[..., None] * self.keys[:, d:]
        dp = (-2j * np.pi) * w[..., None] * self.keys[:, :d]
        return dq.sum(-2), dp.sum(-2)
