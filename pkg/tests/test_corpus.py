from fractions import Fraction

import numpy as np
import pytest

from qmarkov.corpus import _fixture, analysis, check_case, fixture_names, golden_table, load_fixture
from qmarkov.densities import parse_density
from qmarkov.model import block_matrix, validate
from qmarkov.trajectory import TrajectoryConfig, estimate_hitting

CASES = golden_table()


def kraus_path_mean(model, rho, j, i, tol=1e-15, cap=50_000):
    """Oracle: propagate sub-normalised densities through the Kraus maps, absorbing at ``i``."""
    states = [np.zeros((model.k, model.k), dtype=complex) for _ in range(model.n)]
    states[j] = np.asarray(rho, dtype=complex)
    mean = 0.0
    for m in range(1, cap + 1):
        nxt = [sum(model.apply_map(v, u, states[u]) for u in range(model.n)) for v in range(model.n)]
        mean += m * np.trace(nxt[i]).real
        nxt[i] = np.zeros_like(nxt[i])
        states = nxt
        if sum(np.trace(s).real for s in states) < tol:
            return mean
    raise AssertionError("path sum did not converge")


def test_fixture_set():
    assert fixture_names() == ["classical2", "classical3", "ex1", "ex2", "ex3a", "ex3b", "ex3c"]


@pytest.mark.parametrize("name", ["classical2", "classical3", "ex1", "ex2", "ex3a", "ex3b", "ex3c"])
def test_fixtures_are_trace_preserving(name):
    assert validate(load_fixture(name).model).max_residual <= 1e-14


def test_table_size_and_kinds():
    assert len(CASES) == 171
    assert {c.kind for c in CASES} == {"pi_block", "tau", "target", "common_c", "mhtf2", "hunter_diag"}


@pytest.mark.parametrize("case", CASES, ids=[f"{n}:{c.label}" for n, c in enumerate(CASES)])
def test_golden_case(case):
    res = check_case(case)
    assert res.passed, (res.value, res.expected, res.routes)


@pytest.mark.parametrize("case", [c for c in CASES if c.kind == "tau"],
                         ids=lambda c: c.label)
def test_tau_expectation_against_kraus_path_sum(case):
    res = check_case(case)
    model = _fixture(case.fixture, case.params).model
    an = analysis(case.fixture, case.params)
    rho = parse_density(case.density, model.k, lambda v: an.pi.blocks[v])
    assert kraus_path_mean(model, rho, case.j, case.i) == pytest.approx(res.expected, abs=1e-8)


def test_stationary_blocks_against_null_vector():
    for name in ("ex1", "ex2"):
        an = analysis(name)
        a = np.eye(an.t.order) - an.t.matrix
        v = np.linalg.svd(a)[2][-1].conj()
        v = v / sum(v[i * an.t.d:(i + 1) * an.t.d].reshape(2, 2).trace() for i in range(an.t.n))
        for i, block in enumerate(an.pi.blocks):
            assert np.allclose(v[i * 4:(i + 1) * 4].reshape(2, 2), block, atol=1e-12)


def test_spot_values():
    by_label = {c.label: c for c in CASES}
    case = by_label["ex2[p=0.25] tau 0->1 (mixed)"]
    assert check_case(case).expected == 8.0
    case = by_label["ex1[a=0.6] tau 1->0 (basis:0)"]
    assert case.expected == Fraction(25, 16)
    assert check_case(case).value == pytest.approx(25 / 16, abs=1e-12)


@pytest.mark.parametrize("label", ["ex1[a=0.6] return 0 (bloch:0.6,-0.3,0.2)",
                                   "ex2[p=0.75] return 1 (basis:1)",
                                   "ex3a tau 2->0 (bloch:-0.5,0.4,-0.7)"])
def test_tau_against_monte_carlo(label):
    case = next(c for c in CASES if c.label == label)
    res = check_case(case)
    model = _fixture(case.fixture, case.params).model
    rho = parse_density(case.density, model.k)
    est = estimate_hitting(model, (case.j, rho), case.i, TrajectoryConfig(samples=100_000, seed=7))
    assert est.within(res.expected, sigmas=4)


def test_corrupted_expectation_fails():
    case = next(c for c in CASES if c.kind == "tau")
    bad = type(case)(**{**case.__dict__, "expected": "1000"})
    assert not check_case(bad).passed


def test_block_matrix_is_cached_consistently():
    a = analysis("ex2", (("p", 0.5),))
    b = analysis("ex2")
    assert np.allclose(a.t.matrix, b.t.matrix)
    assert np.allclose(a.t.matrix, block_matrix(load_fixture("ex2").model).matrix)
