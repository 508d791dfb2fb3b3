import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pmmdi.coherent import (
    MU_FLOOR,
    TwoModeAmplitude,
    cat_coeffs,
    change_of_basis,
    coherent_overlap,
    gram_matrix,
    operator_from_signal_elements,
    signal_index,
    signal_matrix,
    signal_set,
    signal_vector,
    two_mode_overlap,
)

finite = st.floats(-3, 3, allow_nan=False)
amps = st.builds(complex, finite, finite)
mus = st.floats(1e-4, 2.0)


def fock_overlap(alpha, beta, nmax=40):
    # <alpha|beta> summed over the number basis
    terms = sum((alpha.conjugate() * beta) ** n / math.factorial(n) for n in range(nmax + 1))
    return terms * math.exp(-(abs(alpha) ** 2 + abs(beta) ** 2) / 2)


def test_vacuum_and_normalisation():
    assert coherent_overlap(0, 0) == 1
    assert abs(coherent_overlap(0.7 - 0.2j, 0.7 - 0.2j) - 1) < 1e-15


def test_overlap_opposite_phases():
    a = math.sqrt(0.1146)
    got = coherent_overlap(a, -a)
    assert abs(got - 0.7951694837039032) < 1e-15
    assert abs(got - fock_overlap(a, -a)) < 1e-12


@given(amps, amps)
def test_overlap_matches_fock_sum(a, b):
    assert abs(coherent_overlap(a, b) - fock_overlap(a, b, 80)) < 1e-12
    assert abs(coherent_overlap(a, b)) <= 1 + 1e-15


def test_two_mode_overlap():
    zero = TwoModeAmplitude(0, 0)
    assert two_mode_overlap(zero, zero) == 1
    mu = 0.3
    s = signal_set(mu)
    for x in s:
        assert abs(two_mode_overlap(x, x) - 1) < 1e-15
    assert abs(two_mode_overlap(s[0], s[1]) - math.exp(-4 * mu)) < 1e-15


def test_amplitude_rejects_nonfinite():
    with pytest.raises(ValueError):
        TwoModeAmplitude(float("nan"), 0)
    with pytest.raises(ValueError):
        TwoModeAmplitude(0, complex(0, float("inf")))


def test_signal_set_layout():
    mu = 0.25
    s = signal_set(mu)
    r = math.sqrt(mu)
    assert [(x.a, x.b) for x in s] == [(r, r), (-r, -r), (r, -r), (-r, r)]
    assert all(abs(abs(x.a) ** 2 - mu) < 1e-15 and abs(abs(x.b) ** 2 - mu) < 1e-15 for x in s)
    assert [signal_index(k, y) for k, y in ((0, 0), (1, 1), (0, 1), (1, 0))] == [0, 1, 2, 3]


@given(mus)
def test_cat_coeff_identities(mu):
    c = cat_coeffs(mu)
    assert abs(c.c0**2 + c.c1**2 - 1) < 1e-12
    assert abs(c.c0**2 - c.c1**2 - math.exp(-2 * mu)) < 1e-12
    assert c.c0 > 0 and c.c1 > 0


def test_cat_coeffs_closed_forms():
    mu = 0.1146
    c = cat_coeffs(mu)
    assert abs(c.c0 - math.exp(-mu / 2) * math.sqrt(math.cosh(mu))) < 1e-15
    assert abs(c.c1 - math.exp(-mu / 2) * math.sqrt(math.sinh(mu))) < 1e-15
    assert abs(c.c0**2 - c.c1**2 - 0.7951694837039032) < 1e-12


@pytest.mark.parametrize("mu", [0.0, -1.0, MU_FLOOR, MU_FLOOR / 2])
def test_cat_coeffs_reject_degenerate(mu):
    with pytest.raises(ValueError):
        cat_coeffs(mu)


def test_signal_vectors_printed_layout():
    c = cat_coeffs(0.1146)
    c0, c1 = c.c0, c.c1
    np.testing.assert_allclose(signal_vector(0, c), [c0**2, c1**2, c0 * c1, c0 * c1], atol=1e-16)
    np.testing.assert_allclose(signal_vector(1, c), [c0**2, c1**2, -c0 * c1, -c0 * c1], atol=1e-16)
    np.testing.assert_allclose(signal_vector(2, c), [c0**2, -c1**2, -c0 * c1, c0 * c1], atol=1e-16)
    np.testing.assert_allclose(signal_vector(3, c), [c0**2, -c1**2, c0 * c1, -c0 * c1], atol=1e-16)
    with pytest.raises(IndexError):
        signal_vector(4, c)


@given(mus)
def test_representation_is_isometric(mu):
    c = cat_coeffs(mu)
    s = signal_set(mu)
    for i in range(4):
        vi = signal_vector(i, c)
        assert abs(np.linalg.norm(vi) - 1) < 1e-12
        for j in range(4):
            got = np.vdot(vi, signal_vector(j, c))
            assert abs(got - two_mode_overlap(s[i], s[j])) < 1e-12


@given(st.floats(1e-3, 2.0))
def test_change_of_basis_inverts_signal_matrix(mu):
    c = cat_coeffs(mu)
    M, A = signal_matrix(c), change_of_basis(c)
    # tolerance scaled by the conditioning of A (1/c1^2 grows as mu -> 0)
    tol = 1e-10 * max(1.0, np.abs(A).max() * np.abs(M).max())
    np.testing.assert_allclose(M @ A, np.eye(4), atol=tol)
    np.testing.assert_allclose(A @ M, np.eye(4), atol=tol)


def test_change_of_basis_entries():
    c = cat_coeffs(0.1146)
    A = change_of_basis(c)
    np.testing.assert_allclose(A[:, 0], 1 / (4 * c.c0**2))
    assert abs(A[:, 0].sum() - 1 / c.c0**2) < 1e-12
    np.testing.assert_allclose(np.abs(A[:, 1]), 1 / (4 * c.c1**2))
    np.testing.assert_allclose(np.abs(A[:, 2:]), 1 / (4 * c.c0 * c.c1))
    # sum_n A[n,0] vec(alpha_n) is |e0 e0>
    e00 = sum(A[n, 0] * signal_vector(n, c) for n in range(4))
    np.testing.assert_allclose(e00, [1, 0, 0, 0], atol=1e-12)


@given(mus)
def test_gram_matrix_maps_to_identity(mu):
    c = cat_coeffs(mu)
    G = gram_matrix(mu)
    s = signal_set(mu)
    for i in range(4):
        for j in range(4):
            assert abs(G[j, i] - two_mode_overlap(s[j], s[i])) < 1e-15
    # conditioning of A^dagger G A grows like 1/c1^4
    np.testing.assert_allclose(operator_from_signal_elements(G, c), np.eye(4), atol=1e-10 / min(1, c.c1**4 * 1e3))


def test_operator_from_zero_and_rejects_bad_input():
    c = cat_coeffs(0.2)
    assert np.all(operator_from_signal_elements(np.zeros((4, 4)), c) == 0)
    bad = np.zeros((4, 4), complex)
    bad[0, 1] = 1
    with pytest.raises(ValueError):
        operator_from_signal_elements(bad, c)
    with pytest.raises(ValueError):
        operator_from_signal_elements(np.eye(3), c)
