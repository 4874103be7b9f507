import math

from hypothesis import given, strategies as st
import numpy as np
import pytest

from toral_relax.lattice import SymplecticIntMatrix, fold, wedge
from toral_relax.series import FourierSeries
from toral_relax.weyl import (
    QuantumSetting,
    admissible_angles,
    decode,
    encode,
    fold_phase,
    hs_inner,
    hs_norm,
    is_admissible,
    kick_propagator,
    linear_map_unitary,
    nearest_lattice_shift,
    op_n,
    quantize_translation,
    weyl_matrix,
)

CAT = [[2, 1], [1, 1]]
THETAS = [(0.0, 0.0), (0.5, 0.0), (0.0, 0.5), (0.5, 0.5)]
small = st.integers(-30, 30)


def test_setting_basics():
    s = QuantumSetting(7, theta=(1.25, -0.5))
    assert s.theta == (0.25, 0.5)
    assert s.hbar == pytest.approx(1 / (2 * math.pi * 7))
    assert s.domain().shape == (7, 7, 2)
    with pytest.raises(ValueError):
        QuantumSetting(0)
    with pytest.raises(ValueError):
        QuantumSetting(4, theta=(0.0,))


@pytest.mark.parametrize("N", [2, 4, 10, 64])
def test_even_N_admits_zero_angle(N):
    assert admissible_angles(CAT, N)[0] == (0.0, 0.0)


@pytest.mark.parametrize("N", [3, 5, 11, 101])
def test_odd_N_needs_half_angles(N):
    angles = admissible_angles(CAT, N)
    assert angles == [(0.5, 0.5)]
    F = np.array(CAT)
    r = F @ np.array(angles[0]) - np.array(angles[0]) + 0.5 * N * np.array([2, 1])
    assert np.allclose(r, np.round(r))


def test_angle_count_is_det_F_minus_I():
    F = [[3, 2], [1, 1]]
    for N in (4, 5):
        angles = admissible_angles(F, N)
        assert len(angles) == 2
        assert all(is_admissible(F, N, t) for t in angles)


def test_singular_F_minus_I():
    shear = [[1, 1], [0, 1]]
    assert admissible_angles(shear, 4) == [(0.0, 0.0)]
    with pytest.raises(ValueError):
        admissible_angles(shear, 5)


def test_fold_phase_examples():
    assert fold_phase((3, -2), (0, 0), (0.3, 0.1), 7) == 0.0
    assert fold_phase((1, 0), (1, 0), (0.0, 0.0), 2) == 0.0


@pytest.mark.parametrize("N", [2, 3, 5, 6])
@pytest.mark.parametrize("theta", THETAS)
def test_weyl_matrices_unitary_and_identity(N, theta):
    s = QuantumSetting(N, theta=theta)
    np.testing.assert_allclose(weyl_matrix((0, 0), s), np.eye(N), atol=1e-15)
    for k in [(1, 0), (0, 1), (2, -3)]:
        W = weyl_matrix(k, s)
        np.testing.assert_allclose(W @ W.conj().T, np.eye(N), atol=1e-13)


@given(st.integers(3, 12), st.sampled_from(THETAS), small, small, small, small)
def test_commutation_relation(N, theta, a, b, c, d):
    s = QuantumSetting(N, theta=theta)
    k, m = (a, b), (c, d)
    lhs = weyl_matrix(k, s) @ weyl_matrix(m, s)
    rhs = np.exp(1j * math.pi * wedge(k, m) / N) * weyl_matrix((a + c, b + d), s)
    np.testing.assert_allclose(lhs, rhs, atol=1e-13)


@given(st.integers(3, 12), st.sampled_from(THETAS), small, small, st.integers(-4, 4), st.integers(-4, 4))
def test_quasi_periodicity(N, theta, a, b, c, d):
    s = QuantumSetting(N, theta=theta)
    k = np.array((a, b))
    m = np.array((c, d))
    alpha = fold_phase(k, m, theta, N)
    np.testing.assert_allclose(weyl_matrix(k + N * m, s), np.exp(2j * math.pi * alpha) * weyl_matrix(k, s), atol=1e-13)


def test_quasi_periodicity_odd_N_example():
    s = QuantumSetting(3, theta=(0.5, 0.5))
    alpha = fold_phase((0, 1), (1, 0), s.theta, 3)
    np.testing.assert_allclose(weyl_matrix((3, 1), s), np.exp(2j * math.pi * alpha) * weyl_matrix((0, 1), s), atol=1e-13)


@pytest.mark.parametrize("N,theta", [(4, (0, 0)), (5, (0.5, 0.5)), (6, (0.5, 0.0))])
def test_weyl_basis_orthonormal_and_codec(N, theta):
    s = QuantumSetting(N, theta=theta)
    labels = s.domain().reshape(-1, 2)
    Ws = [weyl_matrix(k, s) for k in labels]
    G = np.array([[hs_inner(A, B, N) for B in Ws] for A in Ws])
    np.testing.assert_allclose(G, np.eye(N * N), atol=1e-13)
    rng = np.random.default_rng(0)
    a = rng.normal(size=(N, N)) + 1j * rng.normal(size=(N, N))
    A = decode(a, s)
    np.testing.assert_allclose(encode(A, s), a, atol=1e-12)
    assert hs_norm(A, N) == pytest.approx(np.linalg.norm(a), rel=1e-12)
    expected = sum(a[tuple(np.mod(k, N))] * W for k, W in zip(labels, Ws))
    np.testing.assert_allclose(A, expected, atol=1e-12)


def test_op_n_examples():
    s = QuantumSetting(6)
    np.testing.assert_allclose(op_n({(0, 0): 1.0}, s), np.eye(6), atol=1e-15)
    C = op_n(FourierSeries.cos_q(1.0), s)
    np.testing.assert_allclose(C, 0.5 * (weyl_matrix((0, 1), s) + weyl_matrix((0, -1), s)), atol=1e-15)
    np.testing.assert_allclose(C, C.conj().T, atol=1e-15)
    # position is diagonal: cos(2 pi q) acts on the q-basis as cos(2 pi q_j)
    np.testing.assert_allclose(np.diag(C), np.cos(2 * math.pi * np.arange(6) / 6), atol=1e-14)


@given(st.integers(3, 9), st.sampled_from(THETAS),
       st.lists(st.tuples(st.integers(-12, 12), st.integers(-12, 12), st.floats(-1, 1), st.floats(-1, 1)),
                min_size=1, max_size=5))
def test_op_n_of_real_function_is_hermitian(N, theta, terms):
    f = {}
    for kq, kp, re, im in terms:
        f[(kq, kp)] = f.get((kq, kp), 0) + complex(re, im)
        f[(-kq, -kp)] = f.get((-kq, -kp), 0) + complex(re, -im)
    A = op_n(f, QuantumSetting(N, theta=theta))
    np.testing.assert_allclose(A, A.conj().T, atol=1e-12)


def test_translation_rounding():
    s = QuantumSetting(10)
    np.testing.assert_allclose(quantize_translation((0.24, 0.0), s), weyl_matrix((2, 0), s))
    np.testing.assert_allclose(quantize_translation((0.25, 0.0), s), weyl_matrix((3, 0), s))
    assert tuple(nearest_lattice_shift((-0.25, 0.05), 10)) == (-2, 1)


def test_kick_propagator_trivial_cases():
    s = QuantumSetting(7)
    np.testing.assert_allclose(kick_propagator({}, s), np.eye(7), atol=1e-14)
    c = 0.013
    U = kick_propagator({(0, 0): c}, s)
    np.testing.assert_allclose(U, np.exp(-2j * math.pi * 7 * c) * np.eye(7), atol=1e-13)
    with pytest.raises(ValueError):
        kick_propagator({(0, 1): 1.0}, s)


def test_kick_propagator_is_unitary_and_diagonal_for_q_kicks():
    s = QuantumSetting(9, theta=(0.5, 0.5))
    U = kick_propagator(FourierSeries.cos_q(0.3 / (2 * math.pi) ** 2), s)
    np.testing.assert_allclose(U @ U.conj().T, np.eye(9), atol=1e-13)
    np.testing.assert_allclose(U, np.diag(np.diag(U)), atol=1e-13)


@pytest.mark.parametrize("F", [CAT, [[1, 1], [1, 2]], [[3, 2], [1, 1]]])
@pytest.mark.parametrize("N", [4, 5, 8])
def test_linear_map_unitary_intertwines(F, N):
    theta = admissible_angles(F, N)[0]
    s = QuantumSetting(N, theta=theta)
    U = linear_map_unitary(F, s)
    np.testing.assert_allclose(U @ U.conj().T, np.eye(N), atol=1e-12)
    Finv = SymplecticIntMatrix(F).inverse
    for k in [(1, 0), (0, 1), (2, 3), (-1, 4)]:
        j = Finv @ np.array(k)
        jf = fold(j, N)
        phase = np.exp(2j * math.pi * fold_phase(jf, (j - jf) // N, theta, N))
        np.testing.assert_allclose(U.conj().T @ weyl_matrix(k, s) @ U, weyl_matrix(j, s), atol=1e-11)
        np.testing.assert_allclose(weyl_matrix(j, s), phase * weyl_matrix(jf, s), atol=1e-12)


def test_linear_map_unitary_rejects_bad_angle():
    with pytest.raises(ValueError):
        linear_map_unitary(CAT, QuantumSetting(5, theta=(0.0, 0.0)))
