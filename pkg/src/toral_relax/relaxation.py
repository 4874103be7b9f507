"""Relaxation times of noisy propagators and the regime classifier.

The relaxation time is the first n >= 1 with ||T^n|| < 1/e on mean-zero
observables.  Noisy propagators are contractions, so their norms decrease
in n and a doubling bracket plus bisection finds it.  Coarse-grained norms
are not known to be monotone and are scanned one n at a time.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .classical import ClassicalMapSpec, classical_norm_coarse_linear, classical_norm_linear, classical_norm_truncated
from .lattice import SymplecticIntMatrix, check_ergodic, ks_entropy
from .noise import max_nonzero_eigenvalue, min_abs_eigenvalue
from .quantum import DenseNormOracle, LinearNormOracle

LOG_THRESHOLD = -1.0
TAU_CEILING = 10**9
# Gaussian noise, one degree of freedom
DEEP_QUANTUM_DELTA = 0.1
QUANTUM_THRESHOLD = 0.5


@dataclass(frozen=True)
class RelaxationResult:
    """tau is an int, or math.inf when the propagator never relaxes.

    ``bracket`` holds the norms at tau - 1 and tau (None entries when tau is
    infinite or the cap was hit).
    """

    tau: object
    flavor: str
    side: str
    bracket: tuple = (None, None)
    scan_cap_hit: bool = False
    info: dict = field(default_factory=dict, compare=False)

    @property
    def finite(self):
        return self.tau != math.inf


@dataclass(frozen=True)
class RegimeTag:
    label: str
    ehrenfest: float
    expansion: float


def _check_flavor(flavor):
    if flavor not in ("noisy", "coarse"):
        raise ValueError("flavor must be 'noisy' or 'coarse'")


def _log_threshold(threshold):
    if threshold is None:
        return LOG_THRESHOLD
    if not 0 < threshold < 1:
        raise ValueError("threshold must lie in (0, 1)")
    return math.log(threshold)


def _as_spec(map_or_F):
    if isinstance(map_or_F, ClassicalMapSpec):
        return map_or_F
    return ClassicalMapSpec(SymplecticIntMatrix.coerce(map_or_F))


def _entropy(F):
    try:
        return ks_entropy(F).min_averaged
    except ValueError:
        return None


def default_scan_cap(eps, F):
    """10 ln(1/eps)/h + 100, the coarse-grained scan length."""
    h = _entropy(F)
    if h is None or not h > 0:
        return 1000
    return int(math.ceil(10 * max(math.log(1.0 / eps), 0.0) / h)) + 100


def _first_below(below, start=1, cap=TAU_CEILING):
    """Smallest n >= start with below(n), assuming below is monotone.

    Returns (n, hit_cap)."""
    lo, hi = start - 1, start
    while not below(hi):
        lo = hi
        if hi >= cap:
            return cap, True
        hi = min(2 * hi, cap)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if below(mid):
            hi = mid
        else:
            lo = mid
    return hi, False


def _scan(below, cap):
    for n in range(1, cap + 1):
        if below(n):
            return n, False
    return cap, True


def _search(norm, flavor, side, cap, decide=None, start=1, log_thr=LOG_THRESHOLD, **info):
    """Run the search on ``norm(n)`` (a PropagatorNorm) and fill the bracket.

    ``start`` is a known lower bound on tau (noisy flavor only)."""
    decide = decide or (lambda n: norm(n).log_value < log_thr)
    if flavor == "noisy":
        tau, hit = _first_below(decide, start=start, cap=cap)
    else:
        tau, hit = _scan(decide, cap)
    if hit:
        return RelaxationResult(math.inf, flavor, side, (None, None), True, info)
    return RelaxationResult(tau, flavor, side, (norm(tau - 1).value, norm(tau).value), False, info)


def tau_classical(map_or_F, kernel, eps, flavor="noisy", K=32, cap=None, threshold=None):
    """Classical relaxation time.

    Linear maps use the exact lattice formulas; maps with a kick or a
    translation go through the Galerkin truncation at cutoff K.
    ``threshold`` replaces the default 1/e.
    """
    _check_flavor(flavor)
    log_thr = _log_threshold(threshold)
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    spec = _as_spec(map_or_F)
    F = spec.linear_part
    if eps == 0:
        return RelaxationResult(math.inf, flavor, "classical", (1.0, 1.0), False, {"reason": "no noise"})
    if flavor == "coarse":
        cap = cap or default_scan_cap(eps, F)
    else:
        cap = cap or 4096
    if spec.kick is None:
        if flavor == "noisy":
            norm = lambda n: classical_norm_linear(F, kernel, eps, n)
        else:
            norm = lambda n: classical_norm_coarse_linear(F, kernel, eps, n)
        return _search(norm, flavor, "classical", cap, log_thr=log_thr, method="linear")
    norm = lambda n: classical_norm_truncated(spec, kernel, eps, n, K, flavor, check_truncation=False)
    return _search(norm, flavor, "classical", cap, log_thr=log_thr, method="galerkin", K=K)


def quantum_lower_bound(kernel, eps, N, threshold=None):
    """ceil(1 / -ln min_k |gamma(k)|): ||T^n|| >= (min |gamma|)^n for every map."""
    if eps == 0:
        return math.inf
    _, lo = min_abs_eigenvalue(kernel, eps, N)
    if lo >= 0:
        return math.inf
    return int(math.ceil(-_log_threshold(threshold) / -lo))


def _never_relaxes(kernel, eps, N, flavor, log_thr=LOG_THRESHOLD):
    """Reason string when no n can bring the norm under the threshold, else None."""
    if eps == 0:
        return "no noise"
    gmax = max_nonzero_eigenvalue(kernel, eps, N)
    if gmax >= 1.0:
        return "a nonzero mode is untouched by the noise"
    if flavor == "coarse":
        _, lo = min_abs_eigenvalue(kernel, eps, N)
        if 2 * lo >= log_thr:
            return "two noise steps cannot reach the threshold"
    if quantum_lower_bound(kernel, eps, N, math.exp(log_thr)) > TAU_CEILING:
        return "relaxation time exceeds 1e9"
    return None


def tau_quantum(map_or_F, kernel, eps, setting, flavor="noisy", path="exact", cap=None, dense_kw=None, threshold=None):
    """Quantum relaxation time on H_N(theta).

    ``path='exact'`` uses the product formula (linear maps, translations
    allowed since they only add phases); ``path='dense'`` builds the
    propagator explicitly (one degree of freedom, any map).
    """
    _check_flavor(flavor)
    log_thr = _log_threshold(threshold)
    if path not in ("exact", "dense"):
        raise ValueError("path must be 'exact' or 'dense'")
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    spec = _as_spec(map_or_F)
    reason = _never_relaxes(kernel, eps, setting.N, flavor, log_thr)
    if reason is not None:
        return RelaxationResult(math.inf, flavor, "quantum", (None, None), False, {"reason": reason, "path": path})
    if flavor == "coarse":
        cap = cap or default_scan_cap(eps, spec.linear_part)
    else:
        cap = cap or TAU_CEILING
    start = quantum_lower_bound(kernel, eps, setting.N, math.exp(log_thr)) if flavor == "noisy" else 1
    if path == "exact":
        if spec.kick is not None:
            raise ValueError("the exact path needs a map without kick")
        oracle = LinearNormOracle(spec.linear_part, kernel, eps, setting)
        if flavor == "coarse":
            tau = oracle.coarse_first_below(cap, log_thr)
            info = {"path": "exact", "method": oracle.method}
            if tau is None:
                return RelaxationResult(math.inf, flavor, "quantum", (None, None), True, info)
            bracket = (oracle.coarse(tau - 1).value, oracle.coarse(tau).value)
            return RelaxationResult(tau, flavor, "quantum", bracket, False, info)
        norm = oracle.noisy
        # with a floor the pruned search may stop early once the answer is known
        decide = lambda n: norm(n, floor=log_thr).log_value < log_thr
        return _search(lambda n: norm(n), flavor, "quantum", cap, decide, start, log_thr, path="exact", method=oracle.method)
    oracle = DenseNormOracle(spec, kernel, eps, setting, **(dense_kw or {}))
    return _search(lambda n: oracle.norm(n, flavor), flavor, "quantum", cap, start=start, log_thr=log_thr, path="dense")


def theorem_constant_M(F, C=None):
    """Smallest M with C e^{-M^2/4} < e^{-2} and ln(M/(4||F||))/h > 2.

    C defaults to 4d + 1.  Returns (M, M_prime) where M is the infimum of
    admissible values and M_prime the least integer strictly above it.
    """
    F = SymplecticIntMatrix.coerce(F)
    C = 4 * F.dim_d + 1 if C is None else C
    h = ks_entropy(F).min_averaged
    mu = float(np.linalg.norm(F.matrix, 2))
    m_noise = 2 * math.sqrt(2 + math.log(C))
    m_entropy = 4 * mu * math.exp(2 * h)
    M = max(m_noise, m_entropy)
    return M, math.floor(M) + 1


def classify_regime(F, eps, N, exponent_E=None, M=None):
    """Label (eps, N) as deeply_quantum, quantum, crossover or semiclassical.

    Checked in that order.  The deep-quantum line eps N <= 0.9/sqrt(ln ln 1/eps)
    only exists for eps < 1/e.  Semiclassical means N > eps^{-E} when an
    exponent is given, otherwise eps N > M for the map's constant M.
    """
    F = SymplecticIntMatrix.coerce(F)
    if not check_ergodic(F):
        raise ValueError("regimes are defined for ergodic maps")
    if not eps > 0 or N < 1:
        raise ValueError("need eps > 0 and N >= 1")
    gamma = math.log(float(np.linalg.norm(F.matrix, 2)))
    tag = lambda label: RegimeTag(label, math.log(N) / gamma, gamma)
    s = eps * N
    if eps < math.exp(-1):
        lnln = math.log(math.log(1.0 / eps))
        if lnln > 0 and s <= (1 - DEEP_QUANTUM_DELTA) / math.sqrt(lnln):
            return tag("deeply_quantum")
    if s < QUANTUM_THRESHOLD:
        return tag("quantum")
    if exponent_E is not None:
        if N > eps ** (-exponent_E):
            return tag("semiclassical")
    else:
        M = theorem_constant_M(F)[0] if M is None else M
        if s > M:
            return tag("semiclassical")
    return tag("crossover")
