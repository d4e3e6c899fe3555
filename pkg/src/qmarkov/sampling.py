"""Random densities, chains and stochastic matrices for tests and surveys."""
from __future__ import annotations

import numpy as np
import scipy.linalg

from .model import QmcModel


def random_density(k: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Density ``W W^dag / Tr`` with ``W`` a complex Gaussian ``k x rank`` matrix."""
    rank = k if rank is None else rank
    w = rng.standard_normal((k, rank)) + 1j * rng.standard_normal((k, rank))
    rho = w @ w.conj().T
    return rho / np.trace(rho).real


def random_qmc(n: int, k: int, rng: np.random.Generator, kraus: int = 1, density: float = 1.0) -> QmcModel:
    """Trace-preserving chain with Gaussian Kraus operators, column-normalised.

    Each edge ``j -> i`` is present with probability ``density`` (self loops
    always), which is generically enough for ergodicity.  The exception is
    ``n = 1`` with ``kraus = 1``: a single unitary conjugation.
    """
    raw = [[[] for _ in range(n)] for _ in range(n)]
    for j in range(n):
        for i in range(n):
            if i != j and rng.random() > density:
                continue
            raw[i][j] = [rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k)) for _ in range(kraus)]
    for j in range(n):
        s = sum(v.conj().T @ v for i in range(n) for v in raw[i][j])
        inv_sqrt = scipy.linalg.inv(scipy.linalg.sqrtm(s))
        for i in range(n):
            raw[i][j] = [v @ inv_sqrt for v in raw[i][j]]
    return QmcModel(n=n, k=k, maps=tuple(tuple(tuple(c) for c in row) for row in raw))


def random_stochastic(n: int, rng: np.random.Generator, zero_fraction: float = 0.0) -> np.ndarray:
    """Column-stochastic ``n x n`` matrix with a positive diagonal (hence aperiodic)."""
    p = rng.random((n, n)) + 0.05
    if zero_fraction > 0:
        mask = rng.random((n, n)) < zero_fraction
        np.fill_diagonal(mask, False)
        p[mask] = 0.0
    return p / p.sum(axis=0, keepdims=True)
