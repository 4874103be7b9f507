import math

from hypothesis import given, strategies as st
import numpy as np
import pytest

from oracles import first_below_scan
from toral_relax.classical import ClassicalMapSpec, classical_norm_coarse_linear, classical_norm_linear
from toral_relax.lattice import ks_entropy
from toral_relax.noise import NoiseKernel
from toral_relax.quantum import DenseNormOracle, LinearNormOracle
from toral_relax.relaxation import (
    TAU_CEILING,
    classify_regime,
    default_scan_cap,
    quantum_lower_bound,
    tau_classical,
    tau_quantum,
    theorem_constant_M,
)
from toral_relax.weyl import QuantumSetting, admissible_angles

CAT = [[2, 1], [1, 1]]
GAUSS = NoiseKernel()
BUMP = NoiseKernel("compact_bump", radius=1.0)
INV_E = math.exp(-1)


def setting(N):
    return QuantumSetting(N, theta=admissible_angles(CAT, N)[0])


@pytest.mark.parametrize("eps", [0.3, 0.1, 0.05, 0.01, 0.002])
def test_classical_tau_matches_linear_scan(eps):
    res = tau_classical(CAT, GAUSS, eps)
    vals = [classical_norm_linear(CAT, GAUSS, eps, n).value for n in range(0, res.tau + 3)]
    assert res.tau == first_below_scan(vals)
    assert res.bracket[1] < INV_E <= res.bracket[0]
    coarse = tau_classical(CAT, GAUSS, eps, "coarse")
    cvals = [classical_norm_coarse_linear(CAT, GAUSS, eps, n).value for n in range(0, coarse.tau + 1)]
    assert coarse.tau == first_below_scan(cvals)


def test_classical_tau_gaussian_closed_form():
    # tau_c is the first n with eps^2 min_k sum_{l=1}^n |F^l k|^2 > 1
    from toral_relax.lattice import min_orbit_extension

    for eps in (0.05, 0.01):
        n = 1
        while eps**2 * min_orbit_extension(CAT, n - 1, variant="sum").value <= 1:
            n += 1
        assert tau_classical(CAT, GAUSS, eps).tau == n


def test_classical_tau_large_noise_and_no_noise():
    assert tau_classical(CAT, GAUSS, 10.0).tau == 1
    assert tau_classical(CAT, GAUSS, 0.0).tau == math.inf
    with pytest.raises(ValueError):
        tau_classical(CAT, GAUSS, -1.0)
    with pytest.raises(ValueError):
        tau_classical(CAT, GAUSS, 0.1, "fast")


@pytest.mark.parametrize("eps,N", [(0.1, 16), (0.1, 40), (0.05, 64), (0.02, 200), (0.1, 9), (0.3, 5)])
def test_quantum_tau_binary_search_equals_scan(eps, N):
    s = setting(N)
    res = tau_quantum(CAT, GAUSS, eps, s)
    o = LinearNormOracle(CAT, GAUSS, eps, s)
    vals = [o.noisy(n).value for n in range(0, res.tau + 3)]
    assert res.tau == first_below_scan(vals)
    assert res.bracket[1] < INV_E <= res.bracket[0]
    assert res.tau >= quantum_lower_bound(GAUSS, eps, N)


@given(st.sampled_from([0.2, 0.1, 0.05, 0.03]), st.integers(4, 120))
def test_quantum_tau_not_below_classical(eps, N):
    q = tau_quantum(CAT, GAUSS, eps, setting(N))
    c = tau_classical(CAT, GAUSS, eps)
    assert q.tau >= c.tau
    assert q.tau >= quantum_lower_bound(GAUSS, eps, N)


def test_quantum_tau_converges_to_classical_for_large_N():
    eps = 0.05
    c = tau_classical(CAT, GAUSS, eps).tau
    for N in (200, 400, 1000):
        assert tau_quantum(CAT, GAUSS, eps, setting(N)).tau == c


def test_dense_and_exact_paths_agree():
    s = setting(16)
    for eps in (0.15, 0.3):
        a = tau_quantum(CAT, GAUSS, eps, s)
        b = tau_quantum(CAT, GAUSS, eps, s, path="dense")
        assert a.tau == b.tau
        assert a.bracket == pytest.approx(b.bracket, abs=1e-10)
    for eps in (0.2, 0.3):
        assert tau_quantum(CAT, GAUSS, eps, s, "coarse").tau == tau_quantum(CAT, GAUSS, eps, s, "coarse", "dense").tau


def test_coarse_quantum_tau_matches_scan():
    s = setting(280)
    o = LinearNormOracle(CAT, GAUSS, 0.1, s)
    res = tau_quantum(CAT, GAUSS, 0.1, s, "coarse")
    assert res.finite
    vals = [o.coarse(n).value for n in range(0, res.tau + 1)]
    assert res.tau == first_below_scan(vals)
    assert res.bracket == (vals[-2], vals[-1])


def test_kicked_map_dense_tau():
    spec = ClassicalMapSpec.kicked(CAT, 0.3)
    res = tau_quantum(spec, GAUSS, 0.2, QuantumSetting(32), path="dense")
    d = DenseNormOracle(spec, GAUSS, 0.2, QuantumSetting(32))
    vals = [d.norm(n).value for n in range(0, res.tau + 2)]
    assert res.tau == first_below_scan(vals)
    with pytest.raises(ValueError):
        tau_quantum(spec, GAUSS, 0.2, QuantumSetting(32), path="exact")


def test_infinite_relaxation_times():
    s = setting(20)
    assert tau_quantum(CAT, GAUSS, 0.0, s).tau == math.inf
    res = tau_quantum(CAT, BUMP, 0.5 / 20, s)
    assert res.tau == math.inf and not res.finite
    assert quantum_lower_bound(BUMP, 0.5 / 20, 20) == math.inf
    # eps N = 0.4: the bound is astronomically large
    assert quantum_lower_bound(GAUSS, 0.4 / 20, 20) > TAU_CEILING
    assert tau_quantum(CAT, GAUSS, 0.4 / 20, s).tau == math.inf


def test_gaussian_lower_bound_scaling():
    # -ln min gamma ~ exp(-pi^2/(eps N)^2) up to a slowly varying factor
    for s in (0.8, 1.0, 1.2):
        b = quantum_lower_bound(GAUSS, s / 40, 40)
        assert 0.1 < b * math.exp(-(math.pi / s) ** 2) < 10


def test_power_law_lower_bound_scaling():
    P = NoiseKernel("power_law", tail=5.0)
    b = {s: quantum_lower_bound(P, s / 40, 40) for s in (0.05, 0.1, 0.2)}
    assert all(b[s] >= 0.1 * s**-5 for s in b)
    assert 4.5 < math.log(b[0.05] / b[0.1]) / math.log(2) < 5.5


def test_threshold_override():
    s = setting(280)
    base = tau_quantum(CAT, GAUSS, 0.1, s)
    strict = tau_quantum(CAT, GAUSS, 0.1, s, threshold=0.1)
    loose = tau_quantum(CAT, GAUSS, 0.1, s, threshold=0.9)
    assert loose.tau <= base.tau <= strict.tau
    assert strict.bracket[1] < 0.1 <= strict.bracket[0]
    assert tau_quantum(CAT, GAUSS, 0.1, s, threshold=INV_E).tau == base.tau
    assert tau_classical(CAT, GAUSS, 0.1, threshold=0.1).tau >= tau_classical(CAT, GAUSS, 0.1).tau
    for bad in (0.0, 1.0, 2.0):
        with pytest.raises(ValueError):
            tau_quantum(CAT, GAUSS, 0.1, s, threshold=bad)


def test_default_scan_cap():
    h = ks_entropy(CAT).min_averaged
    assert default_scan_cap(0.01, CAT) == math.ceil(10 * math.log(100) / h) + 100


def test_theorem_constant():
    M, Mp = theorem_constant_M(CAT)
    assert M == pytest.approx(27.416407865, rel=1e-9)
    assert Mp == 28
    h = ks_entropy(CAT).min_averaged
    mu = np.linalg.norm(np.array(CAT, float), 2)
    for m in (M * (1 + 1e-9), Mp):
        assert 5 * math.exp(-m * m / 4) < math.exp(-2)
        assert math.log(m / (4 * mu)) / h >= 2 - 1e-9


def test_classify_regime_examples():
    assert classify_regime(CAT, 0.01, 10**6).label == "semiclassical"
    assert classify_regime(CAT, 0.01, 120).label == "crossover"
    # eps N = 0.1 lies under the deep-quantum line 0.9/sqrt(ln ln 1000) = 0.647
    assert classify_regime(CAT, 0.001, 100).label == "deeply_quantum"
    assert classify_regime(CAT, 0.001, 700).label == "crossover"
    # the deep-quantum line only drops below eps N = 0.5 for very small eps
    assert classify_regime(CAT, 1e-12, 497 * 10**9).label == "quantum"
    assert classify_regime(CAT, 0.4, 1).label == "quantum"
    tag = classify_regime(CAT, 0.01, 1000)
    assert tag.expansion == pytest.approx(math.log((3 + math.sqrt(5)) / 2))
    assert tag.ehrenfest == pytest.approx(math.log(1000) / tag.expansion)


def test_classify_regime_with_exponent():
    assert classify_regime(CAT, 0.1, 101, exponent_E=2).label == "semiclassical"
    assert classify_regime(CAT, 0.1, 99, exponent_E=2).label == "crossover"
    with pytest.raises(ValueError):
        classify_regime([[1, 1], [0, 1]], 0.1, 100)


@given(st.floats(1e-4, 0.9), st.integers(1, 10**7))
def test_regime_labels_exclusive_and_ordered(eps, N):
    label = classify_regime(CAT, eps, N).label
    M = theorem_constant_M(CAT)[0]
    if eps * N > M:
        assert label == "semiclassical"
    if eps * N < 0.5:
        assert label in ("quantum", "deeply_quantum")
    deep_line = 0.9 / math.sqrt(math.log(math.log(1 / eps))) if eps < math.exp(-1) else -1.0
    if label == "deeply_quantum":
        assert eps * N <= deep_line
    elif 0.5 <= eps * N <= M:
        assert label == "crossover"
