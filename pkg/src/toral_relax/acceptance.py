"""The ten acceptance checks, each returning a CriterionResult.

Every check is deterministic (seeded where random) and reports the numbers
it compared, so a failure can be read off the detail string.
"""

from dataclasses import dataclass
import math
import time

import numpy as np

from .classical import ClassicalMapSpec
from .lattice import fold, ks_entropy, min_orbit_extension, wedge
from .noise import NoiseKernel, classical_eigenvalue, eigenvalue_table, ges_bounds, normalization, quantum_eigenvalue
from .quantum import DenseNormOracle, LinearNormOracle, egorov_discrepancy, map_super, noise_channel_dense
from .relaxation import quantum_lower_bound, tau_classical, tau_quantum, theorem_constant_M
from .series import FourierSeries
from .weyl import QuantumSetting, admissible_angles, fold_phase, weyl_matrix

CAT = ((2, 1), (1, 1))
GAUSS = NoiseKernel()


@dataclass(frozen=True)
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str

    def line(self):
        return f"{'PASS' if self.passed else 'FAIL'} criterion {self.number} ({self.name}): {self.detail}"


def _setting(F, N):
    return QuantumSetting(N, 1, admissible_angles(F, N)[0])


def slope_grid():
    return (0.1, 0.05, 0.02, 0.01, 0.005, 0.002)


def criterion_1():
    """Slope of tau_q against ln(1/eps) at N = ceil(M'/eps) matches 1/h."""
    t0 = time.perf_counter()
    h = ks_entropy(CAT).min_averaged
    _, m_prime = theorem_constant_M(CAT)
    taus = []
    for eps in slope_grid():
        N = math.ceil(m_prime / eps)
        taus.append(tau_quantum(CAT, GAUSS, eps, _setting(CAT, N)).tau)
    elapsed = time.perf_counter() - t0
    x = np.log(1 / np.array(slope_grid()))
    slope = float(np.polyfit(x, np.array(taus, float), 1)[0])
    target = 1 / h
    rel = abs(slope - target) / target
    ok = rel <= 0.10 and elapsed < 60
    return CriterionResult(1, "entropy-rate slope", ok,
                           f"M'={m_prime} taus={taus} slope={slope:.4f} 1/h={target:.4f} rel.err={rel:.3f} time={elapsed:.1f}s")


def criterion_2():
    """tau_q >= tau_c and coarse tau_q >= coarse tau_c on the slope grid and eps N in {0.5, 1, 2}."""
    _, m_prime = theorem_constant_M(CAT)
    violations, checked = [], 0
    for eps in slope_grid():
        tc = tau_classical(CAT, GAUSS, eps).tau
        tcc = tau_classical(CAT, GAUSS, eps, "coarse").tau
        Ns = [math.ceil(m_prime / eps)] + [max(1, round(s / eps)) for s in (0.5, 1.0, 2.0)]
        for N in Ns:
            st = _setting(CAT, N)
            tq = tau_quantum(CAT, GAUSS, eps, st).tau
            tqc = tau_quantum(CAT, GAUSS, eps, st, "coarse").tau
            checked += 2
            if not tq >= tc:
                violations.append(("noisy", eps, N, tq, tc))
            if not tqc >= tcc:
                violations.append(("coarse", eps, N, tqc, tcc))
    return CriterionResult(2, "quantum-classical ordering", not violations,
                           f"{checked} comparisons, violations={violations}")


def criterion_3():
    """Exact product formula against dense propagators, N in {8, 12, 16}."""
    t0 = time.perf_counter()
    worst = 0.0
    for N in (8, 12, 16):
        st = _setting(CAT, N)
        for eps in (0.1, 0.3):
            exact = LinearNormOracle(CAT, GAUSS, eps, st, method="scan")
            dense = DenseNormOracle(CAT, GAUSS, eps, st)
            for n in range(1, 21):
                worst = max(worst, abs(exact.noisy(n).value - dense.norm(n, "noisy").value))
                worst = max(worst, abs(exact.coarse(n).value - dense.norm(n, "coarse").value))
    elapsed = time.perf_counter() - t0
    return CriterionResult(3, "path equivalence", worst <= 1e-10 and elapsed < 30,
                           f"max |exact - dense| = {worst:.2e}, time={elapsed:.1f}s")


def criterion_4(samples=10_000, seed=0):
    """ghat(xi) <= ghat(xi^N) <= gamma <= ghat(xi^N)/Z + 4d e^{-(eps N)^2/4} <= ghat(xi^N) + 4d e^{...}."""
    rng = np.random.default_rng(seed)
    slack = 1e-14
    bad = [0, 0, 0, 0]
    for _ in range(samples):
        eps = rng.uniform(0.01, 2.0)
        N = int(rng.integers(2, 513))
        k = rng.integers(-2 * N, 2 * N + 1, size=2)
        g = float(classical_eigenvalue(GAUSS, eps, k))
        kN = fold(k, N)
        gN = float(classical_eigenvalue(GAUSS, eps, kN))
        gam = float(quantum_eigenvalue(GAUSS, eps, N, k, method="theta"))
        tail = 4 * np.exp(-((eps * N) ** 2) / 4)
        z = normalization(GAUSS, eps, N)
        mid = gN / z + tail
        lo, hi = ges_bounds(eps, N, k)
        bad[0] += not g <= gN + slack
        bad[1] += not gN <= gam + slack
        bad[2] += not gam <= mid + slack
        bad[3] += not (mid <= gN + tail + slack and lo <= gam + slack and gam <= hi + slack)
    return CriterionResult(4, "Gaussian sandwich", not any(bad), f"{samples} triples, violations per inequality={bad}")


def criterion_5(n_range=range(5, 15)):
    """ln(min_k sum_{l<=n} |F^l k|^2)/(2 h n) at n = 14 and its approach to 1."""
    t0 = time.perf_counter()
    h = ks_entropy(CAT).min_averaged
    ratios, certified = [], True
    for n in n_range:
        ext = min_orbit_extension(CAT, n, variant="sum")
        certified &= ext.confirmed
        ratios.append(math.log(ext.value) / (2 * h * n))
    gaps = [abs(r - 1) for r in ratios]
    monotone = all(b <= a + 1e-12 for a, b in zip(gaps, gaps[1:]))
    elapsed = time.perf_counter() - t0
    ok = 0.8 <= ratios[-1] <= 1.2 and monotone and certified and elapsed < 120
    return CriterionResult(5, "orbit-extension trend", ok,
                           f"ratios={[round(r, 4) for r in ratios]} monotone={monotone} certified={certified} time={elapsed:.1f}s")


def criterion_6():
    """Quantum limit: lower bound >= 100 tau_c at eps N = 0.4; compact noise below one lattice step never relaxes."""
    eps = 1e-3
    N = round(0.4 / eps)
    tc = tau_classical(CAT, GAUSS, eps).tau
    lb = quantum_lower_bound(GAUSS, eps, N)
    bump = NoiseKernel("compact_bump", radius=1.0)
    Nb = round(0.5 / eps)
    tb = tau_quantum(CAT, bump, eps, _setting(CAT, Nb)).tau
    ok = lb >= 100 * tc and tb == math.inf
    return CriterionResult(6, "quantum-limit separation", ok,
                           f"tau_c={tc} lower bound={lb} (>= {100 * tc}); bump at eps N=0.5: tau_q={tb}")


def criterion_7(eps=0.05, further=5, N_max=2000):
    """Smallest N with tau_q in {tau_c - 1, tau_c}, stable for the next five N."""
    tc = tau_classical(CAT, GAUSS, eps).tau
    good = lambda N: tau_quantum(CAT, GAUSS, eps, _setting(CAT, N)).tau in (tc - 1, tc)
    for N in range(2, N_max):
        if good(N):
            stable = [good(N + i) for i in range(1, further + 1)]
            return CriterionResult(7, "classical convergence", all(stable),
                                   f"tau_c={tc} onset N0={N} (eps N0={eps * N:.2f}) next {further} N stable={stable}")
    return CriterionResult(7, "classical convergence", False, f"no onset below N={N_max}")


def egorov_ratios(Ns=(32, 64, 128), kappa=0.3, n=3):
    spec = ClassicalMapSpec.kicked(CAT, kappa)
    f = FourierSeries.cos_q(1.0)
    disc = [egorov_discrepancy(spec, f, n, _setting(CAT, N)) for N in Ns]
    return disc, [a / b for a, b in zip(disc, disc[1:])]


def criterion_8():
    """Egorov error ratio D(N)/D(2N) in [1.5, 2.5] for a kicked map; exactly 0 for the linear map."""
    disc, ratios = egorov_ratios()
    f = FourierSeries.cos_q(1.0)
    linear = [egorov_discrepancy(ClassicalMapSpec(CAT), f, 3, _setting(CAT, N)) for N in (32, 64)]
    ok = all(1.5 <= r <= 2.5 for r in ratios) and all(x == 0.0 for x in linear)
    return CriterionResult(8, "Egorov scaling", ok,
                           f"D(32,64,128)={[f'{d:.3e}' for d in disc]} ratios={[round(r, 3) for r in ratios]} linear={linear}")


def _gaussian_residue_weights(eps, N):
    s = eps * N
    R = int(math.ceil(s * 28 / math.pi)) + 2
    ax = np.arange(-R, R + 1)
    pts = np.stack(np.meshgrid(ax, ax, indexing="ij"), -1).reshape(-1, 2)
    w = GAUSS.density(pts / s)
    out = np.zeros((N, N))
    np.add.at(out, tuple(np.mod(pts, N).T), w)
    return out / w.sum()


def criterion_9(seed=0):
    """Commutation and quasi-periodicity to 1e-13; noise channel diagonal and equal to gamma at N = 6."""
    rng = np.random.default_rng(seed)
    worst_ccr = worst_qp = 0.0
    for N in range(3, 13):
        for theta in ((0.0, 0.0), (0.5, 0.5), (0.5, 0.0), (0.0, 0.5)):
            st = QuantumSetting(N, 1, theta)
            for _ in range(12):
                k = rng.integers(-N, N + 1, 2)
                m = rng.integers(-N, N + 1, 2)
                lhs = weyl_matrix(k, st) @ weyl_matrix(m, st)
                rhs = np.exp(1j * np.pi * wedge(k, m) / N) * weyl_matrix(k + m, st)
                worst_ccr = max(worst_ccr, np.abs(lhs - rhs).max())
                lhs = weyl_matrix(k + N * m, st)
                rhs = np.exp(2j * np.pi * fold_phase(k, m, theta, N)) * weyl_matrix(k, st)
                worst_qp = max(worst_qp, np.abs(lhs - rhs).max())
    N, eps = 6, 0.3
    st = QuantumSetting(N, 1, (0.0, 0.0))
    C = noise_channel_dense(_gaussian_residue_weights(eps, N), st)
    off = np.abs(C - np.diag(np.diag(C))).max()
    diag_err = np.abs(np.diag(C) - eigenvalue_table(GAUSS, eps, N).ravel()).max()
    zero_ok = all(eigenvalue_table(kern, e, n)[0, 0] == 1.0
                  for kern in (GAUSS, NoiseKernel("compact_bump"), NoiseKernel("power_law"))
                  for e in (0.01, 0.3) for n in (3, 8, 17))
    ok = worst_ccr <= 1e-13 and worst_qp <= 1e-13 and off <= 1e-12 and diag_err <= 1e-12 and zero_ok
    return CriterionResult(9, "algebra exactness", ok,
                           f"CCR err={worst_ccr:.1e} quasi-periodicity err={worst_qp:.1e} "
                           f"off-diagonal={off:.1e} diagonal vs gamma={diag_err:.1e} gamma(0)=1: {zero_ok}")


def criterion_10(kappa=0.3):
    """The kicked map's superoperator fixes at least N independent operators."""
    spec = ClassicalMapSpec.kicked(CAT, kappa)
    counts = {}
    for N in (3, 5, 8):
        M = map_super(spec, _setting(CAT, N)).matrix()
        counts[N] = int((np.abs(np.linalg.eigvals(M) - 1) < 1e-8).sum())
    return CriterionResult(10, "unit eigenvalue multiplicity", all(c >= N for N, c in counts.items()),
                           f"multiplicity of eigenvalue 1 by N: {counts}")


CRITERIA = {i: globals()[f"criterion_{i}"] for i in range(1, 11)}


def run_all(only=None):
    return [CRITERIA[i]() for i in (only or sorted(CRITERIA))]
