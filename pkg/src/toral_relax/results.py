"""Small result records shared by the norm and relaxation-time routines."""

from dataclasses import dataclass, field
import math


class ConvergenceError(RuntimeError):
    """An iterative solver or quadrature did not reach its tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class PropagatorNorm:
    """Operator norm of an n-step noisy (or coarse-grained) propagator.

    ``maximizer`` is the Fourier label attaining the maximum when the norm
    comes from an exact product formula, else None.
    """

    value: float
    log_value: float
    n: int
    maximizer: tuple = None
    flavor: str = "noisy"
    side: str = "quantum"
    info: dict = field(default_factory=dict, compare=False)

    @classmethod
    def from_log(cls, log_value, n, maximizer=None, flavor="noisy", side="quantum", **info):
        log_value = float(min(log_value, 0.0)) if log_value > 0 and log_value < 1e-13 else float(log_value)
        return cls(math.exp(log_value), log_value, n, maximizer, flavor, side, info)

    @classmethod
    def from_value(cls, value, n, maximizer=None, flavor="noisy", side="quantum", **info):
        value = float(value)
        log_value = math.log(value) if value > 0 else -math.inf
        return cls(value, log_value, n, maximizer, flavor, side, info)
