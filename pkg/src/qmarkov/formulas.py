"""Mean hitting times by formula, cross-checked against the direct operators.

Routes implemented here, each returning ``Tr(k_ij rho_j)`` for ``i != j``:

* ``hunter_general``: block ``(i, j)`` of ``D (Omega G - (Omega G)_d E + I - G + G_d E)``
  for any g-inverse ``G`` of ``I - T``;
* ``hunter_special``: block ``(i, j)`` of ``D (I - G + G_d E)`` for
  ``G = (I - T + |u><e_I|)^-1 + |f><e_I|``;
* ``mhtf1``: ``r_i (Z_ii - Z_ij)`` with the fundamental matrix ``Z``.

``random_target`` and ``mhtf2`` cover the target time and the mean hitting
time from a stationary start.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ginverse import (InadmissibleError, block_diagonal, block_identity, fundamental_matrix,
                       is_ginverse)
from .hitting import HittingOperators, hitting_operators, probe_densities
from .linalg import as_matrix, as_vector, invert
from .model import BlockSuperoperator, QmcDensity, QmcModel, block_matrix, trace_of_action
from .stationary import classify, fixed_point, limit_operator

TOL_FORMULA = 1e-8
TOL_GINV = 1e-9
D_COND_CAP = 1e12


def _blk(m: np.ndarray, i: int, j: int, d: int) -> np.ndarray:
    return m[i * d:(i + 1) * d, j * d:(j + 1) * d]


def hunter_matrix(t: BlockSuperoperator, omega, d_mat, g) -> np.ndarray:
    """``D (Omega G - (Omega G)_d E + I - G + G_d E)``."""
    n, k = t.n, t.k
    e_blk = block_identity(n, k)
    og = omega @ g
    inner = og - block_diagonal(og, n, k) @ e_blk + np.eye(t.order) - g + block_diagonal(g, n, k) @ e_blk
    return d_mat @ inner


def hunter_general(t: BlockSuperoperator, omega, d_mat, g, rho_j, j: int, i: int, *,
                   tol_ginv: float = TOL_GINV) -> float:
    g = as_matrix(g, square=True, name="G")
    ok, resid = is_ginverse(np.eye(t.order) - t.matrix, g, tol=tol_ginv)
    if not ok:
        raise InadmissibleError(f"G is not a g-inverse of I - T (residual {resid:.3e})")
    m = hunter_matrix(t, omega, d_mat, g)
    return trace_of_action(_blk(m, i, j, t.d), rho_j).real


def special_ginverse(t: BlockSuperoperator, uv, f=None) -> np.ndarray:
    """``(I - T + |u><e_I|)^-1 + |f><e_I|``."""
    uv = as_vector(uv, name="u")
    e = t.e_identity()
    if abs(e @ uv) <= 1e-10:
        raise InadmissibleError("<e_I|u> = 0")
    g = invert(np.eye(t.order) - t.matrix + np.outer(uv, e))
    if f is not None:
        g = g + np.outer(as_vector(f, name="f"), e)
    return g


def hunter_special_matrix(t: BlockSuperoperator, d_mat, g) -> np.ndarray:
    """``D (I - G + G_d E)``."""
    return d_mat @ (np.eye(t.order) - g + block_diagonal(g, t.n, t.k) @ block_identity(t.n, t.k))


def hunter_special(t: BlockSuperoperator, d_mat, g_special, rho_j, j: int, i: int, *,
                   omega=None, tol: float = 1e-9) -> float:
    """Hunter's formula without the ``Omega G`` correction.

    The correction vanishes when every block row of ``<e_I| G`` is the same
    multiple of ``vec(I)``, which holds for ``special_ginverse``; pass
    ``omega`` to have that verified.
    """
    g = as_matrix(g_special, square=True, name="G")
    if omega is not None:
        og = omega @ g
        corr = og - block_diagonal(og, t.n, t.k) @ block_identity(t.n, t.k)
        if np.max(np.abs(corr)) > tol * max(1.0, np.max(np.abs(og))):
            raise InadmissibleError("G is not of the form (I - T + |u><e_I|)^-1 + |f><e_I|")
    m = hunter_special_matrix(t, d_mat, g)
    return trace_of_action(_blk(m, i, j, t.d), rho_j).real


def mhtf1(z, ops: HittingOperators, rho_j, j: int, i: int) -> float:
    """``Tr(r_i (Z_ii - Z_ij) rho_j)``."""
    d = ops.k * ops.k
    z = np.asarray(z)
    op = ops.r(i) @ (_blk(z, i, i, d) - _blk(z, i, j, d))
    return trace_of_action(op, rho_j).real


@dataclass(frozen=True)
class RandomTargetResult:
    applicable: bool  # common scalar c with <vec I| r_i = c <vec I| for every i
    c: float | None
    per_vertex_c: tuple[float | None, ...]  # None where the row is not proportional
    t_target: float  # sum_i Tr(Z_ii rho) - 1
    lhs_by_start: tuple[float, ...]  # sum_{i != j} Tr((D^-1 K)_ij rho) for each start j
    consistent: bool  # every lhs equals t_target
    family: str | None

    @property
    def valid(self) -> bool:
        """The target time is meaningful: scalar hypothesis holds, or a declared family checks out."""
        return self.consistent and (self.applicable or self.family is not None)


DENSITY_FAMILIES = ("diagonal",)


def random_target(z, ops: HittingOperators, rho, j: int = 0, *, family: str | None = None,
                  tol: float = 1e-9, tol_formula: float = TOL_FORMULA,
                  cond_cap: float = D_COND_CAP) -> RandomTargetResult:
    """Target time ``t(rho) = sum_i Tr(Z_ii rho) - 1`` and its start-vertex independence.

    ``family`` declares that ``rho`` is restricted to a density family on
    which the identity is expected even though the scalar hypothesis fails
    (currently only ``"diagonal"``).
    """
    rho = as_matrix(rho, square=True, name="rho")
    n, k = ops.n, ops.k
    d = k * k
    if family is not None:
        if family not in DENSITY_FAMILIES:
            raise ValueError(f"unknown density family {family!r}")
        if np.max(np.abs(rho - np.diag(np.diag(rho)))) > 1e-12:
            raise ValueError("rho is not diagonal")
    row_i = np.eye(k).reshape(-1)
    inv_r = []
    cs: list[float | None] = []
    for i in range(n):
        r = ops.r(i)
        if np.linalg.cond(r) > cond_cap:
            raise np.linalg.LinAlgError(f"return-time operator r_{i} is not invertible")
        inv_r.append(invert(r))
        row = row_i @ r
        c_i = float((row @ row_i).real / k)
        # None when <vec I| r_i is not a multiple of <vec I|
        cs.append(c_i if np.max(np.abs(row - c_i * row_i)) <= tol * max(1.0, abs(c_i)) else None)
    found = [c for c in cs if c is not None]
    applicable = len(found) == n and (max(found) - min(found) <= tol * max(1.0, abs(found[0])))
    z = np.asarray(z)
    t_target = sum(trace_of_action(_blk(z, i, i, d), rho).real for i in range(n)) - 1.0
    lhs = []
    for start in range(n):
        total = 0.0
        for i in range(n):
            if i != start:
                total += trace_of_action(inv_r[i] @ ops.kk[i][start], rho).real
        lhs.append(total)
    consistent = all(abs(v - t_target) <= tol_formula for v in lhs)
    return RandomTargetResult(
        applicable=bool(applicable),
        c=cs[0] if applicable else None,
        per_vertex_c=tuple(cs),
        t_target=float(t_target),
        lhs_by_start=tuple(lhs),
        consistent=bool(consistent),
        family=family,
    )


@dataclass(frozen=True)
class Mhtf2Row:
    j: int
    trace_k: float  # Tr(K_j,pi)
    trace_dzf: float  # Tr((DZ)_jj F_j,pi)

    @property
    def residual(self) -> float:
        return abs(self.trace_k - self.trace_dzf)


@dataclass(frozen=True)
class Mhtf2Result:
    rows: tuple[Mhtf2Row, ...]
    tol: float

    @property
    def max_residual(self) -> float:
        return max(r.residual for r in self.rows)

    @property
    def ok(self) -> bool:
        return self.max_residual <= self.tol

    def values(self) -> list[float]:
        return [r.trace_k for r in self.rows]


def mhtf2(z, ops: HittingOperators, pi: QmcDensity, *, tol: float = TOL_FORMULA) -> Mhtf2Result:
    """Mean hitting time of each vertex from a start drawn from ``pi``, both ways."""
    n, k = ops.n, ops.k
    d = k * k
    z = np.asarray(z)
    rows = []
    for j in range(n):
        f_vec = sum(ops.h[j][i] @ pi.blocks[i].reshape(-1) for i in range(n))
        k_vec = sum(ops.kk[j][i] @ pi.blocks[i].reshape(-1) for i in range(n))
        dz = ops.r(j) @ _blk(z, j, j, d)
        tr = np.eye(k).reshape(-1)
        rows.append(Mhtf2Row(j, float((tr @ k_vec).real), float((tr @ (dz @ f_vec)).real)))
    return Mhtf2Result(tuple(rows), tol)


@dataclass(frozen=True)
class FormulaReport:
    method: str
    values: dict = field(repr=False)  # (i, j, probe) -> value
    max_disagreement_vs_direct: float
    tol: float

    @property
    def ok(self) -> bool:
        return self.max_disagreement_vs_direct <= self.tol


@dataclass(frozen=True)
class ChainAnalysis:
    """Everything the formula routes consume, computed once per chain."""

    t: BlockSuperoperator
    pi: QmcDensity
    pi_vec: np.ndarray
    omega: np.ndarray
    z: np.ndarray
    ops: HittingOperators

    @classmethod
    def of(cls, t: BlockSuperoperator) -> "ChainAnalysis":
        st = fixed_point(t)
        omega = limit_operator(st.pi_vec, t.n, t.k)
        return cls(t=t, pi=st.pi, pi_vec=st.pi_vec, omega=omega,
                   z=fundamental_matrix(t, omega), ops=hitting_operators(t))


def cross_check(an: ChainAnalysis, g=None, probes=None, *, tol: float = TOL_FORMULA) -> dict[str, FormulaReport]:
    """Compare every formula route with the direct operators over all ``i != j`` and probes."""
    t, ops = an.t, an.ops
    d = t.d
    probes = probe_densities(t.k) if probes is None else probes
    g = an.z if g is None else g
    ok, resid = is_ginverse(np.eye(t.order) - t.matrix, g)
    if not ok:
        raise InadmissibleError(f"G is not a g-inverse of I - T (residual {resid:.3e})")
    d_mat = ops.D
    general = hunter_matrix(t, an.omega, d_mat, g)
    special = hunter_special_matrix(t, d_mat, special_ginverse(t, np.eye(t.order)[0]))
    routes = {"hunter_general": {}, "hunter_special": {}, "mhtf1": {}}
    worst = dict.fromkeys(routes, 0.0)
    direct = {}
    for i in range(t.n):
        for j in range(t.n):
            if i == j:
                continue
            for p, rho in enumerate(probes):
                ref = trace_of_action(ops.kk[i][j], rho).real
                direct[i, j, p] = ref
                vals = {
                    "hunter_general": trace_of_action(_blk(general, i, j, d), rho).real,
                    "hunter_special": trace_of_action(_blk(special, i, j, d), rho).real,
                    "mhtf1": mhtf1(an.z, ops, rho, j, i),
                }
                for name, v in vals.items():
                    routes[name][i, j, p] = v
                    worst[name] = max(worst[name], abs(v - ref))
    out = {"direct": FormulaReport("direct", direct, 0.0, tol)}
    for name in routes:
        out[name] = FormulaReport(name, routes[name], worst[name], tol)
    return out


def _first_step_classical(p: np.ndarray, target: int) -> np.ndarray:
    """Mean hitting times of ``target`` by solving ``m_j = 1 + sum_{l != target} p_lj m_l``."""
    n = p.shape[0]
    keep = [l for l in range(n) if l != target]
    sub = p[np.ix_(keep, keep)]
    m = np.linalg.solve(np.eye(n - 1) - sub.T, np.ones(n - 1))
    out = np.zeros(n)
    out[keep] = m
    return out


def classical_check(p, *, tol: float = 1e-9) -> FormulaReport:
    """Run the ``k = 1`` reduction of every route against classical formulas.

    ``p`` is column stochastic (``p[i, j]`` is the probability of ``j -> i``).
    Values are ``n x n`` arrays of mean hitting times ``j -> i`` (diagonal 0)
    keyed by route; the reference is the first-step linear system.
    """
    p = np.asarray(p, dtype=float)
    n = p.shape[0]
    if p.shape != (n, n) or np.any(p < 0) or np.max(np.abs(p.sum(axis=0) - 1)) > 1e-12:
        raise ValueError("p must be a square column-stochastic matrix")
    t = block_matrix(QmcModel.classical(p))
    cls = classify(t)
    if not cls.ergodic:
        raise ValueError(f"chain is not ergodic: {cls.evidence}")
    an = ChainAnalysis.of(t)
    pi = an.pi_vec.real
    one = np.ones((1, 1))

    oracle = np.array([_first_step_classical(p, i) for i in range(n)])  # oracle[i, j]: j -> i
    zc = np.linalg.inv(np.eye(n) - p + np.outer(pi, np.ones(n)))
    mhtf = np.array([[0.0 if i == j else (zc[i, i] - zc[i, j]) / pi[i] for j in range(n)] for i in range(n)])
    # Hunter with a non-fundamental g-inverse and Kac's return times 1 / pi_i
    gc = np.linalg.inv(np.eye(n) - p + np.outer(np.eye(n)[0], np.ones(n)))
    dc = np.diag(1.0 / pi)
    big_e = np.ones((n, n))
    pig = np.outer(pi, np.ones(n)) @ gc
    hunter = dc @ (pig - np.diag(np.diag(pig)) @ big_e + np.eye(n) - gc + np.diag(np.diag(gc)) @ big_e)
    np.fill_diagonal(hunter, 0.0)

    qmc = {"qmc_direct": np.zeros((n, n)), "qmc_hunter_general": np.zeros((n, n)),
           "qmc_hunter_special": np.zeros((n, n)), "qmc_mhtf1": np.zeros((n, n))}
    checks = cross_check(an, probes=[one], tol=tol)
    for (i, j, _), v in checks["direct"].values.items():
        qmc["qmc_direct"][i, j] = v
        qmc["qmc_hunter_general"][i, j] = checks["hunter_general"].values[i, j, 0]
        qmc["qmc_hunter_special"][i, j] = checks["hunter_special"].values[i, j, 0]
        qmc["qmc_mhtf1"][i, j] = checks["mhtf1"].values[i, j, 0]

    values = {"first_step": oracle, "classical_mhtf": mhtf, "classical_hunter": hunter, **qmc}
    worst = max(float(np.max(np.abs(v - oracle))) for v in values.values())
    return FormulaReport("classical", values, worst, tol)
