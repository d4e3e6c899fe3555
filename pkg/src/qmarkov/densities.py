"""Single-vertex density specifications.

``mixed``            ``I_k / k``
``basis:a``          ``|e_a><e_a|`` (0-based)
``diag:w0,w1,...``   diagonal with weights normalised to unit trace
``bloch:x,y,z``      ``(I + x X + y Y + z Z) / 2`` for ``k = 2``
``stationary:i``     ``pi_i / Tr(pi_i)``
``file:path``        JSON ``k x k`` matrix, entries real or ``[re, im]``
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Callable

import numpy as np

from .linalg import hermitian_eigenvalues_small

PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


class DensitySpecError(ValueError):
    pass


def check_density(rho: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise DensitySpecError(f"density must be square, got shape {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise DensitySpecError("density is not Hermitian")
    if abs(np.trace(rho) - 1) > tol:
        raise DensitySpecError(f"density has trace {np.trace(rho).real:.12g}, not 1")
    if hermitian_eigenvalues_small(rho)[0] < -tol:
        raise DensitySpecError("density is not positive semidefinite")
    return rho


def _floats(text: str, spec: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",")]
    except ValueError as exc:
        raise DensitySpecError(f"bad numbers in density spec {spec!r}") from exc


def _entry(x) -> complex:
    if isinstance(x, list) and len(x) == 2:
        return complex(float(x[0]), float(x[1]))
    return complex(float(x))


def parse_density(spec: str, k: int, stationary: Callable[[int], np.ndarray] | None = None) -> np.ndarray:
    """Resolve ``spec`` to a ``k x k`` density; ``stationary(i)`` supplies ``pi_i`` on demand."""
    kind, _, arg = spec.partition(":")
    if kind == "mixed" and not arg:
        rho = np.eye(k, dtype=complex) / k
    elif kind == "basis":
        try:
            a = int(arg)
        except ValueError as exc:
            raise DensitySpecError(f"basis index must be an integer in {spec!r}") from exc
        if not 0 <= a < k:
            raise DensitySpecError(f"basis index {a} out of range for k={k}")
        rho = np.zeros((k, k), dtype=complex)
        rho[a, a] = 1
    elif kind == "diag":
        w = _floats(arg, spec)
        if len(w) != k or min(w) < 0 or sum(w) <= 0:
            raise DensitySpecError(f"diag needs {k} nonnegative weights with positive sum")
        rho = np.diag(np.array(w) / sum(w)).astype(complex)
    elif kind == "bloch":
        v = _floats(arg, spec)
        if k != 2 or len(v) != 3:
            raise DensitySpecError("bloch:x,y,z needs k = 2 and three components")
        if sum(c * c for c in v) > 1 + 1e-12:
            raise DensitySpecError("Bloch vector longer than 1")
        rho = (np.eye(2) + sum(c * s for c, s in zip(v, PAULI))) / 2
    elif kind == "stationary":
        if stationary is None:
            raise DensitySpecError("stationary densities need a model")
        try:
            i = int(arg)
        except ValueError as exc:
            raise DensitySpecError(f"vertex must be an integer in {spec!r}") from exc
        block = np.asarray(stationary(i), dtype=complex)
        rho = block / np.trace(block)
    elif kind == "file":
        try:
            raw = json.loads(Path(arg).read_text())
            rho = np.array([[_entry(x) for x in row] for row in raw], dtype=complex)
        except (OSError, ValueError, TypeError) as exc:
            raise DensitySpecError(f"cannot read density file {arg!r}: {exc}") from exc
        if rho.shape != (k, k):
            raise DensitySpecError(f"density file holds shape {rho.shape}, expected {(k, k)}")
    else:
        raise DensitySpecError(f"unknown density spec {spec!r}")
    return check_density(rho)
