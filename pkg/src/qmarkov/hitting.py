"""Monitored evolution: hitting-probability and mean hitting-time operators.

For a target vertex ``i`` let ``P_i`` project onto block ``i`` and
``Q_i = I - P_i``.  The monitored generating function is

    G_ij(x) = P_i T (I - x Q_i T)^-1 P_j          (block (i, j))

and its ``x -> 1`` limits give ``h_ij`` (probability of ever reaching ``i``
from ``j``) and, through ``d/dx [x G_ij(x)]``, the mean hitting-time
operator ``k_ij`` (``i != j``) and the mean return-time operator ``r_i``.
``K`` carries ``r_i`` on its diagonal and ``D = diag(r_i)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import invert, spectral_radius
from .model import BlockSuperoperator, trace_of_action

TOL_HIT = 1e-8
CONTRACTION_MARGIN = 1e-8


class MonitoredRadiusError(ValueError):
    """The monitored operator ``Q_i T`` is not a strict contraction."""


@dataclass(frozen=True)
class MonitorProjectors:
    P: np.ndarray
    Q: np.ndarray


def monitor_projectors(n: int, k: int, i: int) -> MonitorProjectors:
    if not 0 <= i < n:
        raise IndexError(f"vertex {i} out of range for n={n}")
    d = k * k
    p = np.zeros((n * d, n * d))
    p[i * d:(i + 1) * d, i * d:(i + 1) * d] = np.eye(d)
    q = np.eye(n * d) - p
    p.setflags(write=False)
    q.setflags(write=False)
    return MonitorProjectors(p, q)


def _monitored(t: BlockSuperoperator, i: int) -> tuple[np.ndarray, np.ndarray]:
    proj = monitor_projectors(t.n, t.k, i)
    return proj.Q @ t.matrix, t.matrix[i * t.d:(i + 1) * t.d, :]


def monitored_radius(t: BlockSuperoperator, i: int) -> float:
    qt, _ = _monitored(t, i)
    return spectral_radius(qt)


def _resolvent_rows(t, i, x, margin):
    qt, row = _monitored(t, i)
    if x < 0 or x > 1:
        raise ValueError("x must lie in [0, 1]")
    if x == 1:
        rad = spectral_radius(qt)
        if rad >= 1 - margin:
            raise MonitoredRadiusError(
                f"monitored spectral radius {rad:.12g} >= 1 for target vertex {i}")
    res = invert(np.eye(t.order) - x * qt)
    return qt, row @ res, res


def generating_function(t: BlockSuperoperator, i: int, j: int, x: float, *,
                        margin: float = CONTRACTION_MARGIN) -> np.ndarray:
    """Block ``(i, j)`` of ``P_i T (I - x Q_i T)^-1 P_j``."""
    _, w, _ = _resolvent_rows(t, i, x, margin)
    d = t.d
    return w[:, j * d:(j + 1) * d]


def generating_derivative(t: BlockSuperoperator, i: int, j: int, x: float, *,
                          margin: float = CONTRACTION_MARGIN) -> np.ndarray:
    """``d/dx [x G_ij(x)] = G_ij(x) + x P_i T R Q_i T R P_j`` with ``R = (I - x Q_i T)^-1``."""
    qt, w, res = _resolvent_rows(t, i, x, margin)
    d = t.d
    full = w + x * (w @ qt @ res)
    return full[:, j * d:(j + 1) * d]


def monitored_series(t: BlockSuperoperator, i: int, j: int, x: float, terms: int) -> np.ndarray:
    """Truncated path sum ``sum_{m=1..terms} P_i T (Q_i T)^(m-1) P_j x^(m-1)``."""
    qt, row = _monitored(t, i)
    d = t.d
    acc = np.zeros((d, t.order), dtype=complex)
    power = np.eye(t.order, dtype=complex)
    for m in range(terms):
        acc += (x ** m) * (row @ power)
        power = qt @ power
    return acc[:, j * d:(j + 1) * d]


@dataclass(frozen=True)
class HittingOperators:
    n: int
    k: int
    h: tuple  # h[i][j]: hitting-probability operator j -> i (identity on the diagonal)
    kk: tuple  # kk[i][j]: mean hitting-time operator j -> i; kk[i][i] is r_i
    returns: tuple  # returns[i]: return-probability operator G_ii(1)
    radii: tuple[float, ...]  # spectral radius of Q_i T

    def r(self, i: int) -> np.ndarray:
        return self.kk[i][i]

    def _assemble(self, grid) -> np.ndarray:
        return np.block([[np.asarray(grid[i][j]) for j in range(self.n)] for i in range(self.n)])

    @property
    def H(self) -> np.ndarray:
        return self._assemble(self.h)

    @property
    def K(self) -> np.ndarray:
        return self._assemble(self.kk)

    @property
    def D(self) -> np.ndarray:
        d = self.k * self.k
        out = np.zeros((self.n * d, self.n * d), dtype=complex)
        for i in range(self.n):
            out[i * d:(i + 1) * d, i * d:(i + 1) * d] = self.kk[i][i]
        return out


def _ro(a):
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


def hitting_operators(t: BlockSuperoperator, *, margin: float = CONTRACTION_MARGIN) -> HittingOperators:
    """All ``h_ij``, ``k_ij`` and ``r_i`` evaluated at ``x = 1``.

    Raises :class:`MonitoredRadiusError` when some ``Q_i T`` has spectral
    radius within ``margin`` of one, where the ``x -> 1`` limit cannot be
    taken by direct evaluation.
    """
    n, d = t.n, t.d
    h = [[None] * n for _ in range(n)]
    kk = [[None] * n for _ in range(n)]
    returns = []
    radii = []
    for i in range(n):
        qt, row = _monitored(t, i)
        rad = spectral_radius(qt)
        radii.append(rad)
        if rad >= 1 - margin:
            raise MonitoredRadiusError(f"monitored spectral radius {rad:.12g} >= 1 for target vertex {i}")
        res = invert(np.eye(t.order) - qt)
        w = row @ res
        deriv = w + w @ qt @ res
        for j in range(n):
            sl = slice(j * d, (j + 1) * d)
            h[i][j] = _ro(np.eye(d) if i == j else w[:, sl])
            kk[i][j] = _ro(deriv[:, sl])
        returns.append(_ro(w[:, i * d:(i + 1) * d]))
    return HittingOperators(
        n=n, k=t.k,
        h=tuple(tuple(r) for r in h),
        kk=tuple(tuple(r) for r in kk),
        returns=tuple(returns),
        radii=tuple(radii),
    )


@dataclass(frozen=True)
class HittingTime:
    probability: float
    tau: float  # math.inf when the target is not reached almost surely


def tau_and_pi(ops: HittingOperators, rho_j, j: int, i: int, tol_hit: float = TOL_HIT) -> HittingTime:
    """Hitting probability and mean hitting time from ``rho_j`` at ``j`` to ``i``.

    For ``i == j`` the probability is that of ever returning and ``tau`` is
    the mean return time.
    """
    rho_j = np.asarray(rho_j, dtype=complex)
    prob_op = ops.returns[i] if i == j else ops.h[i][j]
    prob = trace_of_action(prob_op, rho_j).real
    if prob < 1 - tol_hit:
        return HittingTime(prob, float("inf"))
    return HittingTime(prob, trace_of_action(ops.kk[i][j], rho_j).real)


def probe_densities(k: int) -> list[np.ndarray]:
    """Unit-trace Hermitian probes spanning all ``k x k`` Hermitian matrices."""
    eye = np.eye(k, dtype=complex)
    probes = [np.outer(eye[a], eye[a]) for a in range(k)]
    for a in range(k):
        for b in range(a + 1, k):
            for coef in (1.0, 1j):
                v = eye[a] + coef * eye[b]
                probes.append(np.outer(v, v.conj()) / 2)
    return probes


def first_step_operator(t: BlockSuperoperator, ops: HittingOperators) -> np.ndarray:
    """``L = K - (K - D) T``."""
    k_mat = ops.K
    return k_mat - (k_mat - ops.D) @ t.matrix


def first_step_residual(t: BlockSuperoperator, ops: HittingOperators) -> float:
    """``max |Tr(L_ij rho) - 1|`` over all blocks and probe densities."""
    lhat = first_step_operator(t, ops)
    d = t.d
    worst = 0.0
    probes = probe_densities(t.k)
    for i in range(t.n):
        for j in range(t.n):
            blk = lhat[i * d:(i + 1) * d, j * d:(j + 1) * d]
            for rho in probes:
                worst = max(worst, abs(trace_of_action(blk, rho) - 1.0))
    return worst
