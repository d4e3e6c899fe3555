"""Quantum Markov chain models, densities and the block superoperator.

A model on ``n`` vertices with internal dimension ``k`` is an ``n x n`` grid
of CP maps given by Kraus lists.  ``maps[i][j]`` is the map for the
transition *from* vertex ``j`` *to* vertex ``i``.  Vertices are 0-based here;
vertex ``v`` in this package is vertex ``v + 1`` in the usual 1-based
write-up of these chains.

The block superoperator ``T`` has order ``n k^2``; block ``(i, j)`` is
``sum_l V_l (x) conj(V_l)`` over the Kraus operators of ``maps[i][j]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .linalg import as_matrix, as_vector, hermitian_eigenvalues_small, superop_of_kraus, vec

TOL_MODEL = 1e-10
TOL_DENSITY = 1e-10


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


def e_identity(n: int, k: int) -> np.ndarray:
    """``vec(I_k)`` stacked ``n`` times: the row with ``<e_I| T = <e_I|``."""
    return np.tile(np.eye(k, dtype=complex).reshape(-1), n)


@dataclass(frozen=True)
class QmcModel:
    n: int
    k: int
    maps: tuple  # maps[i][j] -> tuple of k x k Kraus operators (empty = zero map)
    name: str = ""

    def __post_init__(self):
        if self.n < 1 or self.k < 1:
            raise ValueError("need n >= 1 vertices and k >= 1 internal dimension")
        if len(self.maps) != self.n or any(len(row) != self.n for row in self.maps):
            raise ValueError(f"maps must be an {self.n}x{self.n} grid")
        grid = []
        for i, row in enumerate(self.maps):
            out_row = []
            for j, kraus in enumerate(row):
                ops = []
                for v in kraus or ():
                    m = as_matrix(v, square=True, name=f"Kraus operator of map ({i},{j})")
                    if m.shape != (self.k, self.k):
                        raise ValueError(
                            f"Kraus operator of map ({i},{j}) has shape {m.shape}, "
                            f"expected {(self.k, self.k)}"
                        )
                    ops.append(_frozen(m))
                out_row.append(tuple(ops))
            grid.append(tuple(out_row))
        object.__setattr__(self, "maps", tuple(grid))

    @classmethod
    def oqw(cls, effects: Sequence[Sequence], name: str = "") -> "QmcModel":
        """Open quantum random walk from an ``n x n`` grid of effect matrices (``None`` = no edge)."""
        n = len(effects)
        k = None
        grid = []
        for row in effects:
            grid.append([() if b is None else (b,) for b in row])
            for b in row:
                if b is not None:
                    k = np.asarray(b).shape[0]
        if k is None:
            raise ValueError("an OQW needs at least one effect matrix")
        return cls(n=n, k=k, maps=tuple(tuple(r) for r in grid), name=name)

    @classmethod
    def classical(cls, p, name: str = "") -> "QmcModel":
        """The ``k = 1`` chain of a column-stochastic matrix ``p``."""
        p = np.asarray(p, dtype=float)
        n = p.shape[0]
        grid = [[((np.array([[np.sqrt(p[i, j])]]),) if p[i, j] > 0 else ()) for j in range(n)]
                for i in range(n)]
        return cls(n=n, k=1, maps=tuple(tuple(r) for r in grid), name=name)

    def apply_map(self, i: int, j: int, rho: np.ndarray) -> np.ndarray:
        """``Phi_ij(rho)`` by direct Kraus conjugation."""
        out = np.zeros((self.k, self.k), dtype=complex)
        for v in self.maps[i][j]:
            out += v @ rho @ v.conj().T
        return out


@dataclass(frozen=True)
class ValidationReport:
    residuals: tuple[float, ...]  # per source vertex j
    tol: float

    @property
    def max_residual(self) -> float:
        return max(self.residuals) if self.residuals else 0.0

    @property
    def ok(self) -> bool:
        return self.max_residual <= self.tol

    def __bool__(self) -> bool:
        return self.ok

    @property
    def failures(self) -> list[int]:
        return [j for j, r in enumerate(self.residuals) if r > self.tol]


def validate(model: QmcModel, tol: float = TOL_MODEL) -> ValidationReport:
    """Trace preservation per column: ``sum_i sum_l V^dagger V == I_k``."""
    residuals = []
    eye = np.eye(model.k)
    for j in range(model.n):
        acc = np.zeros((model.k, model.k), dtype=complex)
        for i in range(model.n):
            for v in model.maps[i][j]:
                acc += v.conj().T @ v
        residuals.append(float(np.linalg.norm(acc - eye, 2)))
    return ValidationReport(tuple(residuals), tol)


@dataclass(frozen=True)
class BlockSuperoperator:
    n: int
    k: int
    matrix: np.ndarray
    cp_verified: bool = True

    def __post_init__(self):
        m = as_matrix(self.matrix, square=True, name="block superoperator")
        if m.shape[0] != self.n * self.k * self.k:
            raise ValueError(f"order {m.shape[0]} != n k^2 = {self.n * self.k * self.k}")
        object.__setattr__(self, "matrix", _frozen(m))

    @property
    def order(self) -> int:
        return self.matrix.shape[0]

    @property
    def d(self) -> int:
        """Block size ``k^2``."""
        return self.k * self.k

    def block(self, i: int, j: int) -> np.ndarray:
        d = self.d
        return self.matrix[i * d:(i + 1) * d, j * d:(j + 1) * d]

    def e_identity(self) -> np.ndarray:
        return e_identity(self.n, self.k)

    def trace_residual(self) -> float:
        """``max |<e_I| T - <e_I||``; zero for a trace-preserving chain."""
        e = self.e_identity()
        return float(np.max(np.abs(e @ self.matrix - e)))

    @classmethod
    def from_superoperators(cls, blocks, k: int) -> "BlockSuperoperator":
        """Assemble from raw ``k^2 x k^2`` blocks.  Complete positivity is *not* checked."""
        n = len(blocks)
        rows = [np.hstack([as_matrix(b) for b in row]) for row in blocks]
        return cls(n=n, k=k, matrix=np.vstack(rows), cp_verified=False)


def block_matrix(model: QmcModel) -> BlockSuperoperator:
    n, k = model.n, model.k
    d = k * k
    t = np.zeros((n * d, n * d), dtype=complex)
    for i in range(n):
        for j in range(n):
            if model.maps[i][j]:
                t[i * d:(i + 1) * d, j * d:(j + 1) * d] = superop_of_kraus(model.maps[i][j])
    return BlockSuperoperator(n=n, k=k, matrix=t)


@dataclass(frozen=True)
class QmcDensity:
    """Blocks ``rho_0 .. rho_{n-1}``; each positive semidefinite, total trace one."""

    blocks: tuple
    check: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        blocks = tuple(_frozen(as_matrix(b, square=True, name="density block")) for b in self.blocks)
        if not blocks:
            raise ValueError("a density needs at least one block")
        k = blocks[0].shape[0]
        if any(b.shape != (k, k) for b in blocks):
            raise ValueError("density blocks must share one shape")
        object.__setattr__(self, "blocks", blocks)
        if self.check:
            for i, b in enumerate(blocks):
                if np.max(np.abs(b - b.conj().T)) > TOL_DENSITY:
                    raise ValueError(f"density block {i} is not Hermitian")
                if hermitian_eigenvalues_small(b)[0] < -TOL_DENSITY:
                    raise ValueError(f"density block {i} is not positive semidefinite")
            total = sum(np.trace(b) for b in blocks)
            if abs(total - 1.0) > TOL_DENSITY:
                raise ValueError(f"density has total trace {total.real:.12g}, expected 1")

    @property
    def n(self) -> int:
        return len(self.blocks)

    @property
    def k(self) -> int:
        return self.blocks[0].shape[0]

    def as_vector(self) -> np.ndarray:
        """``|rho>``: the row-stacked blocks concatenated."""
        return np.concatenate([vec(b) for b in self.blocks])

    @classmethod
    def from_vector(cls, v, n: int, k: int, *, hermitize: bool = True, check: bool = True) -> "QmcDensity":
        x = as_vector(v)
        if x.shape[0] != n * k * k:
            raise ValueError(f"vector length {x.shape[0]} != n k^2 = {n * k * k}")
        blocks = []
        for i in range(n):
            b = x[i * k * k:(i + 1) * k * k].reshape(k, k)
            if hermitize:
                b = (b + b.conj().T) / 2
            blocks.append(b)
        return cls(tuple(blocks), check=check)

    @classmethod
    def concentrated(cls, n: int, j: int, rho) -> "QmcDensity":
        """``rho`` placed on vertex ``j``, zero elsewhere."""
        rho = as_matrix(rho, square=True)
        k = rho.shape[0]
        if not 0 <= j < n:
            raise IndexError(f"vertex {j} out of range for n={n}")
        return cls(tuple(rho if i == j else np.zeros((k, k)) for i in range(n)))


def apply(t: BlockSuperoperator, rho: QmcDensity) -> QmcDensity:
    """One step ``|rho> -> T|rho>``, with each block re-Hermitised."""
    if rho.n != t.n or rho.k != t.k:
        raise ValueError(f"density (n={rho.n}, k={rho.k}) does not match chain (n={t.n}, k={t.k})")
    return QmcDensity.from_vector(t.matrix @ rho.as_vector(), t.n, t.k)


def vertex_distribution(rho: QmcDensity) -> list[float]:
    return [float(np.trace(b).real) for b in rho.blocks]


def trace_of_action(op, gamma) -> complex:
    """``Tr(unvec(op @ vec(gamma)))`` for a ``k^2 x k^2`` operator and ``k x k`` matrix."""
    g = as_matrix(gamma, square=True, name="gamma")
    k = g.shape[0]
    m = np.asarray(op, dtype=complex)
    if m.shape != (k * k, k * k):
        raise ValueError(f"operator shape {m.shape} does not act on {k}x{k} matrices")
    return complex(np.eye(k).reshape(-1) @ (m @ g.reshape(-1)))
