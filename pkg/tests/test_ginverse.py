import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qmarkov.corpus import analysis
from qmarkov.ginverse import (GInverseForm, InadmissibleError, block_diagonal, block_identity,
                              ginverse_from_form, is_ginverse, perturbation_inverse, random_forms)
from qmarkov.linalg import basis_vector

ERGODIC = ["ex1", "ex2", "ex3a", "ex3b", "ex3c", "classical2", "classical3"]


@pytest.mark.parametrize("name", ERGODIC)
def test_random_members_are_ginverses(name):
    an = analysis(name)
    a = np.eye(an.t.order) - an.t.matrix
    for form in random_forms(an.t.order, 12, seed=5):
        ok, resid = is_ginverse(a, ginverse_from_form(an.t, an.pi_vec, form))
        assert ok, (form.variant, resid)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=20, deadline=None)
def test_ginverse_property_on_example_two(seed):
    an = analysis("ex2")
    a = np.eye(an.t.order) - an.t.matrix
    for form in random_forms(an.t.order, 3, seed=seed, scale=1.0):
        assert is_ginverse(a, ginverse_from_form(an.t, an.pi_vec, form), tol=1e-8)[0]


def test_pseudoinverse_is_recognised_and_identity_is_not():
    an = analysis("ex3a")
    a = np.eye(an.t.order) - an.t.matrix
    assert is_ginverse(a, np.linalg.pinv(a))[0]
    assert not is_ginverse(a, np.eye(an.t.order))[0]


def test_fundamental_matrix_identities():
    an = analysis("ex3c")
    eye = np.eye(an.t.order)
    z = ginverse_from_form(an.t, an.pi_vec, GInverseForm("fundamental"))
    assert np.allclose(z, an.z)
    assert np.allclose(z @ (eye - an.t.matrix), eye - an.omega, atol=1e-12)
    assert np.allclose(z @ an.pi_vec, an.pi_vec, atol=1e-12)
    assert np.allclose(an.t.e_identity() @ z, an.t.e_identity(), atol=1e-12)


def test_perturbation_inverse_with_default_basis_vectors():
    an = analysis("ex2")
    e0 = basis_vector(an.t.order)
    g = perturbation_inverse(an.t, e0, e0)
    assert np.allclose(ginverse_from_form(an.t, an.pi_vec, GInverseForm("perturbation")), g)


def test_inadmissible_choices_raise():
    an = analysis("ex1")
    off = basis_vector(an.t.order, 1)  # off-diagonal entry: <e_I|off> = 0 and <off|pi> = 0
    with pytest.raises(InadmissibleError):
        perturbation_inverse(an.t, off, basis_vector(an.t.order))
    with pytest.raises(InadmissibleError):
        ginverse_from_form(an.t, an.pi_vec, GInverseForm("family_a", u=off))


def test_shape_errors():
    an = analysis("ex1")
    with pytest.raises(ValueError):
        ginverse_from_form(an.t, an.pi_vec, GInverseForm("family_a", H=np.eye(3)))
    with pytest.raises(ValueError):
        ginverse_from_form(an.t, an.pi_vec, GInverseForm("nonsense"))


def test_block_identity_and_diagonal():
    e = block_identity(2, 2)
    assert e.shape == (8, 8)
    assert np.allclose(e[:4, 4:], np.eye(4)) and np.allclose(e[4:, :4], np.eye(4))
    x = np.arange(64.0).reshape(8, 8)
    xd = block_diagonal(x, 2, 2)
    assert np.allclose(xd[:4, :4], x[:4, :4]) and np.allclose(xd[:4, 4:], 0)
    # k = 1: E is the all-ones matrix
    assert np.allclose(block_identity(3, 1), np.ones((3, 3)))
