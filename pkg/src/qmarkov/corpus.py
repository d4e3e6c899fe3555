"""Bundled fixtures and the golden-value table.

Expected values are exact rationals, expression strings, or ``k x k`` grids
of expression strings.  Expressions may use the fixture parameters and the
start density through ``rho11``, ``rho22``, ``re12`` and ``im12`` (entries of
``rho`` with 1-based indices; ``re12`` is ``Re rho_12``).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Union

import numpy as np

from .densities import parse_density
from .expr import evaluate, parse
from .formulas import (ChainAnalysis, hunter_matrix, hunter_special_matrix, mhtf1, mhtf2,
                       random_target, special_ginverse)
from .ginverse import perturbation_inverse
from .linalg import basis_vector
from .model import block_matrix, trace_of_action
from .modelfile import LoadedModel, parse_model

FIXTURE_VERSION = "v1"
EX1_A = (0.36, 0.6, 0.8)
EX2_P = (0.25, 0.5, 0.75)

Expected = Union[Fraction, str, tuple]


@dataclass(frozen=True)
class GoldenCase:
    fixture: str
    quantity: str
    kind: str  # pi_block | tau | target | common_c | mhtf2 | hunter_diag
    density: str = "mixed"
    expected: Expected = Fraction(0)
    tol: float = 1e-8
    params: tuple = ()  # (name, value) pairs overriding fixture params
    note: str = ""
    j: int | None = None  # start vertex
    i: int | None = None  # target vertex
    family: str | None = None

    @property
    def label(self) -> str:
        p = ", ".join(f"{k}={v:g}" for k, v in self.params)
        return f"{self.fixture}{'[' + p + ']' if p else ''} {self.quantity} ({self.density})"


@dataclass(frozen=True)
class CaseResult:
    case: GoldenCase
    value: float
    expected: float
    error: float  # worst deviation over every route checked
    routes: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.error) and self.error <= self.case.tol)


def fixture_dir() -> Path:
    return Path(str(resources.files("qmarkov") / "fixtures" / FIXTURE_VERSION))


def fixture_names() -> list[str]:
    return sorted(p.stem for p in fixture_dir().glob("*.json"))


def load_fixture(name: str, **params: float) -> LoadedModel:
    return parse_model(fixture_dir() / f"{name}.json", params)


@lru_cache(maxsize=64)
def _fixture(name: str, params: tuple) -> LoadedModel:
    return load_fixture(name, **dict(params))


@lru_cache(maxsize=64)
def analysis(name: str, params: tuple = ()) -> ChainAnalysis:
    return ChainAnalysis.of(block_matrix(_fixture(name, params).model))


TRACE_DENSITIES = ("basis:0", "basis:1", "mixed", "bloch:0.6,-0.3,0.2", "bloch:-0.5,0.4,-0.7")


def golden_table() -> list[GoldenCase]:
    cases: list[GoldenCase] = []
    add = cases.append

    for a in EX1_A:
        pa = (("a", a),)
        for v in (0, 1):
            add(GoldenCase("ex1", f"pi_{v}", "pi_block", expected=(("1/4", "0"), ("0", "1/4")),
                           tol=1e-10, params=pa, note="uniform stationary state", i=v))
        for dens in TRACE_DENSITIES:
            add(GoldenCase("ex1", "tau 1->0", "tau", dens,
                           "rho11/(1-a^2) + 2*rho22 + 2*a/sqrt(1-a^2)*re12", params=pa, j=1, i=0,
                           note="closed-form hitting trace"))
            add(GoldenCase("ex1", "return 0", "tau", dens,
                           "(3-2*a^2)*rho11 + (1+2*a^2)*rho22 - 4*a*sqrt(1-a^2)*re12", params=pa, j=0, i=0,
                           note="closed-form return trace"))
    add(GoldenCase("ex1", "tau 1->0", "tau", "basis:0", Fraction(25, 16), params=(("a", 0.6),), j=1, i=0,
                   note="a = 3/5, rho = |e1><e1|"))

    for p in EX2_P:
        pp = (("p", p),)
        add(GoldenCase("ex2", "pi_0", "pi_block", expected=(("13/(32+45*p)", "12/(32+45*p)"),
                                                            ("12/(32+45*p)", "19/(32+45*p)")),
                       tol=1e-10, params=pp, i=0, note="rational in p"))
        add(GoldenCase("ex2", "pi_1", "pi_block", expected=(("12*p/(32+45*p)", "-15*p/(32+45*p)"),
                                                            ("-15*p/(32+45*p)", "33*p/(32+45*p)")),
                       tol=1e-10, params=pp, i=1, note="rational in p"))
        for dens in TRACE_DENSITIES:
            add(GoldenCase("ex2", "return 0", "tau", dens, "1 + p*(9/8 + 3/4*re12)", params=pp, j=0, i=0))
            add(GoldenCase("ex2", "tau 1->0", "tau", dens, "3*(rho11 + rho22/2 - re12/2)", params=pp, j=1, i=0))
            add(GoldenCase("ex2", "tau 0->1", "tau", dens, "2/p", params=pp, j=0, i=1))
            add(GoldenCase("ex2", "return 1", "tau", dens, "(2 + 3*p + 2*rho22 + 4*re12)/(3*p)",
                           params=pp, j=1, i=1))
        for v in (0, 1):
            add(GoldenCase("ex2", f"hunter diag {v} = r_{v}", "hunter_diag", expected=Fraction(0), tol=1e-9,
                           params=pp, i=v, note="diagonal block of D(I - G + G_d E), G perturbed at e_0"))

    for dens in TRACE_DENSITIES:
        for j, i in ((1, 0), (2, 1), (0, 2)):
            add(GoldenCase("ex3a", f"tau {j}->{i}", "tau", dens, "16/7 - 2/7*re12", j=j, i=i))
        for j, i in ((2, 0), (1, 2), (0, 1)):
            add(GoldenCase("ex3a", f"tau {j}->{i}", "tau", dens, "20/7 + 9/7*re12", j=j, i=i))
    for fx, dens, val, fam in (("ex3a", "diag:1,0", Fraction(12, 7), "diagonal"),
                               ("ex3a", "diag:0.3,0.7", Fraction(12, 7), "diagonal"),
                               ("ex3b", "mixed", Fraction(8, 3), None),
                               ("ex3b", "bloch:0.6,-0.3,0.2", Fraction(8, 3), None),
                               ("ex3c", "diag:1,0", Fraction(5, 2), "diagonal"),
                               ("ex3c", "mixed", Fraction(5, 2), "diagonal")):
        for j in range(3):
            add(GoldenCase(fx, "t_target", "target", dens, val, j=j, family=fam,
                           note="start-vertex independent target time"))
    add(GoldenCase("ex3b", "common c", "common_c", expected=Fraction(3)))
    for fx, vals in (("ex3a", (Fraction(19, 7),) * 3), ("ex3b", (Fraction(11, 3),) * 3),
                     ("ex3c", (Fraction(41, 6), Fraction(41, 6), Fraction(11, 6)))):
        for j, v in enumerate(vals):
            add(GoldenCase(fx, f"Tr(K_{j},pi)", "mhtf2", "stationary", v, j=j,
                           note="both sides of the stationary-start identity"))

    for q, r in ((0.5, 0.5), (0.25, 0.5)):
        pc = (("q", q), ("r", r))
        add(GoldenCase("classical2", "tau 0->1", "tau", "mixed", "1/q", tol=1e-12, params=pc, j=0, i=1,
                       note="geometric waiting time"))
        add(GoldenCase("classical2", "tau 1->0", "tau", "mixed", "1/r", tol=1e-12, params=pc, j=1, i=0,
                       note="geometric waiting time"))
    return cases


def _density_env(rho: np.ndarray) -> dict:
    env = {"rho11": rho[0, 0].real, "re12": 0.0, "im12": 0.0, "rho22": 0.0}
    if rho.shape[0] > 1:
        env.update(rho22=rho[1, 1].real, re12=rho[0, 1].real, im12=rho[0, 1].imag)
    return env


def _value(expected, env) -> float:
    if isinstance(expected, Fraction):
        return float(expected)
    return evaluate(parse(expected), env)


def tau_routes(an: ChainAnalysis, rho, j: int, i: int) -> dict[str, float]:
    """Mean hitting (or return) time from every applicable route."""
    ops, t = an.ops, an.t
    d = t.d
    sl_i, sl_j = slice(i * d, (i + 1) * d), slice(j * d, (j + 1) * d)
    out = {"direct": trace_of_action(ops.kk[i][j], rho).real}
    if i == j:
        return out
    e0 = basis_vector(t.order)
    d_mat = ops.D
    g_pert = perturbation_inverse(t, e0, e0)
    out["hunter_general_Z"] = trace_of_action(hunter_matrix(t, an.omega, d_mat, an.z)[sl_i, sl_j], rho).real
    out["hunter_general_pert"] = trace_of_action(hunter_matrix(t, an.omega, d_mat, g_pert)[sl_i, sl_j], rho).real
    g_sp = special_ginverse(t, e0, f=e0)
    out["hunter_special"] = trace_of_action(hunter_special_matrix(t, d_mat, g_sp)[sl_i, sl_j], rho).real
    out["mhtf1"] = mhtf1(an.z, ops, rho, j, i)
    return out


def check_case(case: GoldenCase) -> CaseResult:
    an = analysis(case.fixture, case.params)
    k = an.t.k
    env = dict(_fixture(case.fixture, case.params).params)
    rho = parse_density(case.density, k, lambda v: an.pi.blocks[v]) if case.kind != "mhtf2" else None
    if rho is not None:
        env.update(_density_env(rho))

    if case.kind == "pi_block":
        exp = np.array([[evaluate(parse(x), env) for x in row] for row in case.expected])
        got = np.asarray(an.pi.blocks[case.i])
        err = float(np.max(np.abs(got - exp)))
        return CaseResult(case, float(got.real.trace()), float(exp.trace()), err, {"pi_block": err})

    if case.kind == "tau":
        exp = _value(case.expected, env)
        routes = tau_routes(an, rho, case.j, case.i)
        err = max(abs(v - exp) for v in routes.values())
        return CaseResult(case, routes["direct"], exp, err, routes)

    if case.kind == "hunter_diag":
        t, ops = an.t, an.ops
        d = t.d
        g = perturbation_inverse(t, basis_vector(t.order), basis_vector(t.order))
        sl = slice(case.i * d, (case.i + 1) * d)
        blk = hunter_special_matrix(t, ops.D, g)[sl, sl]
        err = float(np.max(np.abs(blk - ops.kk[case.i][case.i])))
        return CaseResult(case, err, 0.0, err, {"max |block - r_i|": err})

    if case.kind == "target":
        res = random_target(an.z, an.ops, rho, case.j, family=case.family)
        exp = _value(case.expected, env)
        routes = {"t_target": res.t_target, f"lhs from {case.j}": res.lhs_by_start[case.j]}
        err = max(abs(v - exp) for v in routes.values())
        if not res.valid:
            err = float("inf")
        return CaseResult(case, res.t_target, exp, err, routes)

    if case.kind == "common_c":
        res = random_target(an.z, an.ops, np.eye(k) / k)
        exp = _value(case.expected, env)
        c = res.c if res.applicable else float("nan")
        err = abs(c - exp) if res.applicable else float("inf")
        return CaseResult(case, c, exp, err, {"c": c})

    if case.kind == "mhtf2":
        row = mhtf2(an.z, an.ops, an.pi).rows[case.j]
        exp = _value(case.expected, env)
        routes = {"Tr(K)": row.trace_k, "Tr(DZ F)": row.trace_dzf}
        err = max(abs(v - exp) for v in routes.values())
        return CaseResult(case, row.trace_k, exp, err, routes)

    raise ValueError(f"unknown golden case kind {case.kind!r}")


def run_golden(cases=None) -> list[CaseResult]:
    return [check_case(c) for c in (golden_table() if cases is None else cases)]
