import math

from hypothesis import given, strategies as st
import numpy as np
import pytest

from oracles import fold_py, matvec_py, min_extension_brute, wedge_py
from toral_relax.lattice import (
    SymplecticIntMatrix,
    canonical_tiebreak,
    check_ergodic,
    check_symplectic,
    direct_sum,
    fold,
    from_plain,
    ks_entropy,
    min_orbit_extension,
    orbit_mod_N,
    to_plain,
    wedge,
)

CAT = [[2, 1], [1, 1]]
ints = st.integers(-10**6, 10**6)


def elementary(a, b, c):
    """A random-ish symplectic 2x2 product of shears."""
    S1 = np.array([[1, a], [0, 1]], dtype=object)
    S2 = np.array([[1, 0], [b, 1]], dtype=object)
    S3 = np.array([[1, c], [0, 1]], dtype=object)
    return S1.dot(S2).dot(S3)


def test_wedge_examples():
    assert wedge((1, 0), (0, 1)) == -1
    assert wedge((2, 3), (5, 7)) == 1
    assert wedge((4, -9), (4, -9)) == 0


@given(st.lists(ints, min_size=4, max_size=4), st.lists(ints, min_size=4, max_size=4))
def test_wedge_antisymmetric_and_matches_loops(k, m):
    assert wedge(k, m) == -wedge(m, k)
    assert wedge(k, m) == wedge_py(k, m)


@given(st.integers(-5, 5), st.integers(-5, 5), st.integers(-5, 5),
       st.lists(st.integers(-1000, 1000), min_size=2, max_size=2),
       st.lists(st.integers(-1000, 1000), min_size=2, max_size=2))
def test_wedge_preserved_by_symplectic_maps(a, b, c, k, m):
    F = elementary(a, b, c)
    assert check_symplectic(F)
    Fk, Fm = matvec_py(F.tolist(), k), matvec_py(F.tolist(), m)
    assert wedge_py(Fk, Fm) == wedge_py(k, m)


def test_wedge_preserved_in_four_dimensions():
    F = direct_sum(CAT, [[3, 2], [1, 1]])
    rng = np.random.default_rng(3)
    for _ in range(50):
        k, m = rng.integers(-50, 50, 4), rng.integers(-50, 50, 4)
        assert wedge(F @ k, F @ m) == wedge(k, m)


def test_plain_frequency_round_trip():
    n = np.array([3, -2])
    k = from_plain(n)
    np.testing.assert_array_equal(to_plain(k), n)
    x = np.array([0.3, 0.7])
    assert np.isclose(wedge(k.astype(float), x), n @ x)


@pytest.mark.parametrize("F,expected", [
    (CAT, True),
    ([[1, 1], [1, 1]], False),
    (np.eye(4, dtype=int), True),
    ([[1, 2], [0, 1]], True),
    ([[2, 0], [0, 1]], False),
])
def test_check_symplectic(F, expected):
    assert check_symplectic(F) is expected


def test_non_symplectic_matrix_rejected():
    with pytest.raises(ValueError):
        SymplecticIntMatrix([[1, 1], [1, 1]])
    with pytest.raises(ValueError):
        SymplecticIntMatrix([[1.5, 0], [0, 1]])


@pytest.mark.parametrize("F,expected", [
    (CAT, True),
    ([[0, -1], [1, 0]], False),
    ([[1, 1], [0, 1]], False),
    ([[-2, -1], [-1, -1]], True),
    ([[-1, 0], [0, -1]], False),
    ([[3, 2], [1, 1]], True),
])
def test_check_ergodic(F, expected):
    assert check_ergodic(F) is expected


def test_fold_examples():
    assert tuple(fold((7, -12), 10)) == (-3, -2)
    assert tuple(fold((5, 5), 10)) == (5, 5)
    assert tuple(fold((0, 0), 7)) == (0, 0)
    assert tuple(fold((3, -3), 7)) == (3, -3)


@given(st.lists(ints, min_size=2, max_size=4), st.lists(st.integers(-100, 100), min_size=4, max_size=4),
       st.integers(1, 500))
def test_fold_idempotent_and_periodic(k, m, N):
    m = m[:len(k)]
    f = fold(k, N)
    np.testing.assert_array_equal(fold(f, N), f)
    np.testing.assert_array_equal(fold(np.array(k) + N * np.array(m), N), f)
    assert tuple(f) == fold_py(k, N)
    assert np.all(2 * f > -N) and np.all(2 * f <= N)


def test_orbit_mod_2_example():
    assert orbit_mod_N(CAT, (1, 0), 2) == [(1, 0), (0, 1), (1, 1)]


def test_orbit_identity_is_fixed():
    assert orbit_mod_N([[1, 0], [0, 1]], (3, 4), 9) == [(3, 4)]


def test_orbit_length_mod_5_by_iteration():
    cur, n = (1, 0), 0
    while True:
        cur = tuple(x % 5 for x in matvec_py(CAT, cur))
        n += 1
        if cur == (1, 0):
            break
    assert len(orbit_mod_N(CAT, (1, 0), 5)) == n == 10


def test_orbit_rejects_zero():
    with pytest.raises(ValueError):
        orbit_mod_N(CAT, (0, 0), 5)


@pytest.mark.parametrize("N", [2, 3, 5, 8, 12])
def test_orbits_partition_the_torus(N):
    seen = {}
    for k in np.ndindex(N, N):
        if not any(k):
            continue
        key = tuple(fold(k, N))
        orb = frozenset(orbit_mod_N(CAT, key, N))
        assert key in orb
        for pt in orb:
            assert seen.setdefault(pt, orb) == orb
    assert len(seen) == N * N - 1


def test_min_orbit_extension_examples():
    ext = min_orbit_extension(CAT, 1)
    assert (ext.value, ext.argmin, ext.confirmed) == (3, (0, 1), True)
    assert min_extension_brute(CAT, 1, 3) == 3
    ident = min_orbit_extension([[1, 0], [0, 1]], 1)
    assert ident.value == 2 and sum(x * x for x in ident.argmin) == 1


@pytest.mark.parametrize("n", [1, 2, 3, 5])
@pytest.mark.parametrize("variant", ["endpoint", "sum"])
def test_min_orbit_extension_matches_brute_force(n, variant):
    ext = min_orbit_extension(CAT, n, variant=variant)
    assert ext.value == min_extension_brute(CAT, n, 6, variant)


def test_min_orbit_extension_sum_n10_entropy_window():
    h = ks_entropy(CAT).min_averaged
    v = min_orbit_extension(CAT, 10, variant="sum").value
    assert 0.8 <= math.log(v) / (2 * h * 10) <= 1.2


def test_min_orbit_extension_endpoint_trend():
    h = ks_entropy(CAT).min_averaged
    ratios = [math.log(min_orbit_extension(CAT, n).value) / (2 * h * n) for n in range(5, 15)]
    assert all(0.8 < r < 1.2 for r in ratios)
    assert abs(ratios[-1] - 1) < abs(ratios[0] - 1)


@pytest.mark.parametrize("n", [17, 20, 40, 120])
def test_min_orbit_extension_large_n_is_exact(n):
    ext = min_orbit_extension(CAT, n)
    k = np.array(ext.argmin, dtype=object)
    img = SymplecticIntMatrix(CAT).power(n).dot(k)
    assert ext.value == int((k**2).sum() + (img**2).sum())
    assert ext.confirmed
    h = ks_entropy(CAT).min_averaged
    assert 0.95 < math.log(ext.value) / (2 * h * n) < 1.05


def test_min_orbit_extension_beats_box_search_outside_box():
    # the minimiser for this map sits outside |k|_inf <= 12
    ext = min_orbit_extension([[5, 8], [3, 5]], 4)
    assert max(abs(x) for x in ext.argmin) > 12
    assert ext.value < min_extension_brute([[5, 8], [3, 5]], 4, 12)


@given(st.integers(-4, 4), st.integers(-4, 4), st.integers(-4, 4), st.integers(0, 4),
       st.sampled_from(["endpoint", "sum"]))
def test_min_orbit_extension_reduction_matches_box(a, b, c, n, variant):
    F = elementary(a, b, c).tolist()
    ext = min_orbit_extension(F, n, variant=variant)
    R = max(abs(x) for x in ext.argmin)
    assert ext.value == min_extension_brute(F, n, min(R + 1, 9), variant) or R + 1 > 9


def test_min_orbit_extension_four_dimensional_box_search():
    F = direct_sum(CAT, [[1, 1], [1, 2]])
    ext = min_orbit_extension(F, 2)
    assert ext.confirmed
    assert ext.value == min_extension_brute(F.tolist(), 2, 3)


def test_min_orbit_extension_bad_args():
    with pytest.raises(ValueError):
        min_orbit_extension(CAT, -1)
    with pytest.raises(ValueError):
        min_orbit_extension(CAT, 1, radius=0)


def test_canonical_tiebreak():
    assert canonical_tiebreak([(0, -1), (0, 1)]) == (0, 1)
    assert canonical_tiebreak([(-1, 2), (1, -2), (2, 0)]) == (1, -2)


def test_ks_entropy_cat():
    e = ks_entropy(CAT)
    assert e.block_entropies[0] == pytest.approx(0.9624237, abs=1e-7)
    assert e.block_entropies[0] == pytest.approx(math.log((3 + math.sqrt(5)) / 2), rel=1e-12)
    assert e.min_averaged == pytest.approx(0.4812118, abs=1e-7)


def test_ks_entropy_same_charpoly_and_inverse():
    a = ks_entropy(CAT).min_averaged
    assert ks_entropy([[1, 1], [1, 2]]).min_averaged == pytest.approx(a, rel=1e-12)
    inv = SymplecticIntMatrix(CAT).inverse
    assert ks_entropy(inv).min_averaged == pytest.approx(a, rel=1e-12)


def test_ks_entropy_block_diagonal():
    F = direct_sum(CAT, [[3, 2], [1, 1]])
    e = ks_entropy(F, blocks=(2, 2))
    rate2 = math.log(2 + math.sqrt(3))
    assert sorted(e.block_entropies) == pytest.approx(sorted([math.log((3 + math.sqrt(5)) / 2), rate2]), rel=1e-12)
    assert e.min_averaged == pytest.approx(min(e.averaged))
    with pytest.raises(ValueError):
        ks_entropy(F, blocks=(4,))


def test_ks_entropy_rejects_non_ergodic():
    with pytest.raises(ValueError):
        ks_entropy([[0, -1], [1, 0]])


def test_power_exact_and_inverse():
    F = SymplecticIntMatrix(CAT)
    P = F.power(60)
    assert P[0, 0] > 2**63  # beyond int64, still exact
    np.testing.assert_array_equal(F.matrix @ F.inverse, np.eye(2, dtype=int))
    back = F.power(-3).dot(F.power(3))
    assert back.tolist() == [[1, 0], [0, 1]]
