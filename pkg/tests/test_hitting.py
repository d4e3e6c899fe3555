import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qmarkov.corpus import analysis, load_fixture
from qmarkov.hitting import (MonitoredRadiusError, first_step_residual, generating_derivative,
                             generating_function, hitting_operators, monitor_projectors, monitored_radius,
                             monitored_series, probe_densities, tau_and_pi)
from qmarkov.model import QmcModel, block_matrix, trace_of_action
from qmarkov.sampling import random_density, random_qmc

ERGODIC = ["ex1", "ex2", "ex3a", "ex3b", "ex3c", "classical2", "classical3"]


def path_sum_mean(t, i, j, terms):
    """Oracle: sum_m m * P_i T (Q_i T)^(m-1) P_j, truncated."""
    proj = monitor_projectors(t.n, t.k, i)
    qt = proj.Q @ t.matrix
    row = t.matrix[i * t.d:(i + 1) * t.d, :]
    acc = np.zeros((t.d, t.order), dtype=complex)
    power = np.eye(t.order)
    for m in range(1, terms + 1):
        acc += m * (row @ power)
        power = qt @ power
    return acc[:, j * t.d:(j + 1) * t.d]


@pytest.mark.parametrize("name", ERGODIC)
def test_derivative_against_central_difference(name):
    t = analysis(name).t
    x, h = 0.7, 1e-5
    for i in range(t.n):
        for j in range(t.n):
            fd = ((x + h) * generating_function(t, i, j, x + h) - (x - h) * generating_function(t, i, j, x - h)) / (2 * h)
            assert np.max(np.abs(generating_derivative(t, i, j, x) - fd)) <= 1e-6


@pytest.mark.parametrize("name", ERGODIC)
def test_generating_function_against_series(name):
    # remainder after N terms is x^N P_i T (Q_i T)^N (I - x Q_i T)^-1, exactly
    t = analysis(name).t
    x, terms = 0.9, 60
    for i in range(t.n):
        proj = monitor_projectors(t.n, t.k, i)
        qt = proj.Q @ t.matrix
        row = t.matrix[i * t.d:(i + 1) * t.d, :]
        tail = x ** terms * row @ np.linalg.matrix_power(qt, terms) @ np.linalg.inv(np.eye(t.order) - x * qt)
        for j in range(t.n):
            diff = generating_function(t, i, j, x) - monitored_series(t, i, j, x, terms)
            assert np.max(np.abs(diff - tail[:, j * t.d:(j + 1) * t.d])) <= 1e-13
            long = generating_function(t, i, j, x) - monitored_series(t, i, j, x, 400)
            assert np.max(np.abs(long)) <= 1e-12


@pytest.mark.parametrize("name", ["ex1", "ex2", "ex3a", "ex3c"])
def test_mean_time_operator_against_path_sum(name):
    an = analysis(name)
    t = an.t
    for i in range(t.n):
        for j in range(t.n):
            ref = path_sum_mean(t, i, j, 1500)
            assert np.max(np.abs(an.ops.kk[i][j] - ref)) <= 1e-9


@pytest.mark.parametrize("name", ERGODIC)
def test_hitting_probabilities_are_one(name):
    an = analysis(name)
    for rho in probe_densities(an.t.k):
        for i in range(an.t.n):
            for j in range(an.t.n):
                assert tau_and_pi(an.ops, rho, j, i).probability == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("name", ERGODIC)
def test_kac_return_times(name):
    an = analysis(name)
    for i, block in enumerate(an.pi.blocks):
        w = np.trace(block).real
        assert trace_of_action(an.ops.r(i), block / w).real == pytest.approx(1 / w, abs=1e-8)


@pytest.mark.parametrize("name", ERGODIC)
def test_first_step_identity(name):
    an = analysis(name)
    assert first_step_residual(an.t, an.ops) <= 1e-9


@given(st.integers(0, 2**32 - 1), st.integers(2, 4), st.integers(1, 2))
@settings(max_examples=20, deadline=None)
def test_first_step_identity_on_random_chains(seed, n, k):
    rng = np.random.default_rng(seed)
    t = block_matrix(random_qmc(n, k, rng))
    ops = hitting_operators(t)
    assert first_step_residual(t, ops) <= 1e-8
    rho = random_density(k, rng)
    for i in range(n):
        for j in range(n):
            assert tau_and_pi(ops, rho, j, i).probability == pytest.approx(1.0, abs=1e-8)


def test_example_one_value():
    ops = analysis("ex1", (("a", 0.6),)).ops
    rho = np.diag([1.0, 0.0])
    assert tau_and_pi(ops, rho, 1, 0).tau == pytest.approx(25 / 16, abs=1e-12)


def test_classical_two_state_closed_forms():
    q, r = 0.25, 0.5
    ops = hitting_operators(block_matrix(load_fixture("classical2", q=q, r=r).model))
    one = np.ones((1, 1))
    assert tau_and_pi(ops, one, 0, 1).tau == pytest.approx(1 / q, abs=1e-12)
    assert tau_and_pi(ops, one, 1, 0).tau == pytest.approx(1 / r, abs=1e-12)
    # return time to 0: stay with 1-q, else leave and come back after 1/r more steps
    assert tau_and_pi(ops, one, 0, 0).tau == pytest.approx((1 - q) + q * (1 + 1 / r), abs=1e-12)


def test_unreachable_target_has_infinite_time():
    # state 1 is absorbing apart from 0 -> 1; from 1 the walk never reaches 0
    p = np.array([[0.5, 0.0, 0.0], [0.5, 0.5, 0.5], [0.0, 0.5, 0.5]])
    t = block_matrix(QmcModel.classical(p))
    with pytest.raises(MonitoredRadiusError):
        hitting_operators(t)
    assert monitored_radius(t, 0) == pytest.approx(1.0)
    # target 1 is still reached from everywhere
    g = generating_function(t, 1, 0, 1.0)
    assert g[0, 0] == pytest.approx(1.0)


def test_generating_function_rejects_bad_x():
    t = analysis("ex1").t
    with pytest.raises(ValueError):
        generating_function(t, 0, 1, 1.5)
