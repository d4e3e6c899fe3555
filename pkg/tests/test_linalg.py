import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qmarkov.linalg import (ConvergenceWarning, IllConditionedWarning, SingularMatrixError, basis_vector,
                            det_and_adjugate, hermitian_eigenvalues_small, invert, solve, spectral_radius,
                            superop_of_kraus, unvec, vec)


def cmat(rng, n, m=None):
    m = n if m is None else m
    return rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))


seeds = st.integers(min_value=0, max_value=2**32 - 1)


def test_vec_is_row_stacking():
    a = np.array([[1, 2], [3, 4]])
    assert np.array_equal(vec(a), [1, 2, 3, 4])
    assert np.array_equal(unvec(vec(a), 2), a)


def test_unvec_rejects_wrong_length():
    with pytest.raises(ValueError):
        unvec(np.ones(5), 2)


@given(seeds, st.integers(1, 4), st.integers(1, 3))
def test_superoperator_matches_kraus_conjugation(seed, k, count):
    rng = np.random.default_rng(seed)
    kraus = [cmat(rng, k) for _ in range(count)]
    x = cmat(rng, k)
    direct = sum(v @ x @ v.conj().T for v in kraus)
    assert np.allclose(unvec(superop_of_kraus(kraus) @ vec(x), k), direct, atol=1e-10)


@given(seeds, st.integers(1, 8))
def test_solve_and_invert_against_numpy(seed, n):
    rng = np.random.default_rng(seed)
    a = cmat(rng, n) + 3 * n * np.eye(n)
    b = cmat(rng, n, 2)
    assert np.allclose(solve(a, b), np.linalg.solve(a, b), atol=1e-10)
    assert np.allclose(invert(a) @ a, np.eye(n), atol=1e-10)


def test_invert_rejects_singular():
    a = np.array([[1.0, 2.0], [2.0, 4.0]])
    with pytest.raises(SingularMatrixError):
        invert(a)
    with pytest.raises(SingularMatrixError):
        invert(np.zeros((3, 3)))


def test_invert_warns_when_ill_conditioned():
    # unit pivots, but the inverse grows like 2^n
    n = 45
    a = np.eye(n) - np.triu(np.ones((n, n)), 1)
    with pytest.warns(IllConditionedWarning):
        invert(a)


def test_invert_rejects_non_finite():
    with pytest.raises(ValueError):
        invert(np.array([[1.0, np.nan], [0.0, 1.0]]))


@given(seeds, st.integers(1, 6), st.booleans())
def test_adjugate_identity(seed, n, singular):
    # A adj(A) = adj(A) A = det(A) I holds for singular A as well
    rng = np.random.default_rng(seed)
    a = cmat(rng, n)
    if singular and n > 1:
        a[:, -1] = a[:, 0] * (1 - 2j)
    det, adj = det_and_adjugate(a)
    scale = max(1.0, np.max(np.abs(adj)), abs(det))
    assert np.allclose(a @ adj, det * np.eye(n), atol=1e-9 * scale)
    assert np.allclose(adj @ a, det * np.eye(n), atol=1e-9 * scale)
    assert abs(det - np.linalg.det(a)) <= 1e-9 * max(1.0, abs(det))


def test_adjugate_of_rank_deficient_matrix_is_nonzero():
    # rank n-1 gives a rank-1 adjugate, built from cofactors
    a = np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0], [7.0, 8.0, 9.0]])
    det, adj = det_and_adjugate(a)
    assert abs(det) < 1e-12
    expected = np.array([[-3, 6, -3], [6, -12, 6], [-3, 6, -3]])
    assert np.allclose(adj, expected)


@given(seeds, st.integers(1, 10))
@settings(max_examples=40)
def test_spectral_radius_against_eigvals(seed, n):
    rng = np.random.default_rng(seed)
    a = cmat(rng, n) / np.sqrt(n)
    ref = np.max(np.abs(np.linalg.eigvals(a)))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        est = spectral_radius(a)
    assert abs(est - ref) <= 1e-3 * max(ref, 1e-12)


def test_spectral_radius_of_nilpotent_and_rotation():
    assert spectral_radius(np.array([[0.0, 1.0], [0.0, 0.0]])) == 0.0
    rot = np.array([[0.0, -1.0], [1.0, 0.0]])
    assert abs(spectral_radius(rot) - 1.0) < 1e-9


def test_spectral_radius_of_jordan_block_is_slow_but_close():
    j = np.array([[0.5, 1.0], [0.0, 0.5]])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        assert abs(spectral_radius(j) - 0.5) < 1e-6


@given(seeds, st.integers(1, 8))
def test_jacobi_eigenvalues_against_eigvalsh(seed, n):
    rng = np.random.default_rng(seed)
    a = cmat(rng, n)
    h = a + a.conj().T
    assert np.allclose(hermitian_eigenvalues_small(h), np.linalg.eigvalsh(h), atol=1e-9)


def test_jacobi_rejects_non_hermitian_and_large():
    with pytest.raises(ValueError):
        hermitian_eigenvalues_small(np.array([[0, 1], [0, 0]]))
    with pytest.raises(ValueError):
        hermitian_eigenvalues_small(np.eye(17))


def test_basis_vector():
    e = basis_vector(4, 2)
    assert e.dtype == complex and e[2] == 1 and np.sum(np.abs(e)) == 1
