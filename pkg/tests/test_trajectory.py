import numpy as np
import pytest

from qmarkov.corpus import analysis, load_fixture
from qmarkov.hitting import tau_and_pi
from qmarkov.model import QmcModel, block_matrix
from qmarkov.sampling import random_density, random_qmc
from qmarkov.trajectory import (DeadStateError, TrajectoryConfig, _chunk_generator, _Moments, _run_chunk,
                                estimate_hitting, step_sample)


class FixedUniform:
    def __init__(self, u):
        self.u = u

    def random(self):
        return self.u


def test_classical_step_follows_column():
    p = np.array([[0.2, 0.5], [0.8, 0.5]])
    m = QmcModel.classical(p)
    one = np.ones((1, 1))
    assert step_sample(m, 0, one, FixedUniform(0.19))[0] == 0
    assert step_sample(m, 0, one, FixedUniform(0.21))[0] == 1
    rng = np.random.default_rng(0)
    draws = [step_sample(m, 0, one, rng)[0] for _ in range(20000)]
    freq = np.mean(draws)
    assert abs(freq - 0.8) <= 4 * np.sqrt(0.8 * 0.2 / 20000)


def test_example_one_step_probabilities():
    m = load_fixture("ex1", a=0.6).model
    rho = np.diag([1.0, 0.0])
    vertex, nxt = step_sample(m, 0, rho, FixedUniform(0.3599))
    assert vertex == 0 and np.allclose(nxt, np.diag([1.0, 0.0]))
    vertex, nxt = step_sample(m, 0, rho, FixedUniform(0.3601))
    assert vertex == 1 and np.allclose(nxt, np.diag([0.0, 1.0]))


def test_step_probabilities_sum_to_one_on_random_chains():
    rng = np.random.default_rng(4)
    for _ in range(10):
        m = random_qmc(3, 2, rng, kraus=2)
        rho = random_density(2, rng)
        total = sum(np.trace(m.apply_map(i, 1, rho)).real for i in range(3))
        assert abs(total - 1) <= 1e-10
        _, nxt = step_sample(m, 1, rho, rng)
        assert np.allclose(nxt, nxt.conj().T) and abs(np.trace(nxt) - 1) <= 1e-12


def test_last_bucket_absorbs_rounding():
    m = QmcModel.classical(np.array([[0.5, 0.5], [0.5, 0.5]]))
    assert step_sample(m, 0, np.ones((1, 1)), FixedUniform(1 - 1e-17))[0] == 1


def test_dead_state_is_reported():
    m = QmcModel(n=2, k=1, maps=(((), ()), ((), ())))
    with pytest.raises(DeadStateError):
        step_sample(m, 0, np.ones((1, 1)), FixedUniform(0.5))


def test_engine_replays_through_step_sample():
    m = load_fixture("ex3c").model
    rho = np.eye(2) / 2
    size, steps, target = 64, 300, 2
    tmat = np.array(block_matrix(m).matrix)
    got = _run_chunk((tmat, m.n, m.k, 0, rho, target, size, steps, 9, 0))
    rng = _chunk_generator(9, 0)
    uniforms = np.array([rng.random(size) for _ in range(steps)])
    ref = _Moments()
    for s in range(size):
        vertex, state = 0, rho
        for step in range(1, steps + 1):
            vertex, state = step_sample(m, vertex, state, FixedUniform(uniforms[step - 1, s]))
            if vertex == target:
                ref = ref.merge(_Moments(1, step, step * step, 0))
                break
        else:
            ref = ref.merge(_Moments(censored=1))
    assert got == ref


def test_determinism_across_reruns_and_workers():
    m = load_fixture("ex2").model
    start = (0, np.eye(2) / 2)
    a = estimate_hitting(m, start, 1, TrajectoryConfig(samples=20000, seed=3, chunk=1024))
    b = estimate_hitting(m, start, 1, TrajectoryConfig(samples=20000, seed=3, chunk=1024))
    c = estimate_hitting(m, start, 1, TrajectoryConfig(samples=20000, seed=3, chunk=1024, workers=3))
    assert a == b == c
    d = estimate_hitting(m, start, 1, TrajectoryConfig(samples=20000, seed=4, chunk=1024))
    assert d != a


def test_example_two_matches_analytic():
    m = load_fixture("ex2", p=0.5).model
    est = estimate_hitting(m, (0, np.eye(2) / 2), 1, TrajectoryConfig(samples=100_000, seed=1))
    assert est.hit_fraction == 1.0 and est.censored == 0
    assert abs(est.mean - 4.0) <= 4 * est.stderr


def test_example_three_b_matches_operator_value():
    an = analysis("ex3b")
    m = load_fixture("ex3b").model
    rho = np.eye(2) / 2
    exact = tau_and_pi(an.ops, rho, 0, 1).tau
    est = estimate_hitting(m, (0, rho), 1, TrajectoryConfig(samples=100_000, seed=2))
    assert abs(est.mean - exact) <= 4 * est.stderr


def test_classical_chain_matches_linear_system():
    p = np.array([[0.5, 0.2, 0.6], [0.25, 0.3, 0.0], [0.25, 0.5, 0.4]])
    m = QmcModel.classical(p)
    # first-step oracle for target 1
    keep = [0, 2]
    sub = p[np.ix_(keep, keep)]
    times = np.linalg.solve(np.eye(2) - sub.T, np.ones(2))
    est = estimate_hitting(m, (2, np.ones((1, 1))), 1, TrajectoryConfig(samples=50_000, seed=5))
    assert abs(est.mean - times[1]) <= 4 * est.stderr


def test_censoring_is_reported_separately():
    m = load_fixture("classical2", q=0.01, r=0.5).model
    est = estimate_hitting(m, (0, np.ones((1, 1))), 1, TrajectoryConfig(samples=5000, seed=0, max_steps=5))
    assert est.censored > 0
    assert est.hit_fraction == pytest.approx(1 - est.censored / 5000)
    assert est.mean <= 5


def test_config_validation():
    with pytest.raises(ValueError):
        TrajectoryConfig(samples=0)
    with pytest.raises(ValueError):
        TrajectoryConfig(max_steps=0)
