"""Stationary density, limit operator and ergodicity classification."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .linalg import SingularMatrixError, as_matrix, as_vector, basis_vector, hermitian_eigenvalues_small, invert
from .model import BlockSuperoperator, QmcDensity, e_identity

TOL_FIX = 1e-9
TOL_POS = 1e-10
TOL_ADMISSIBLE = 1e-10
TOL_APERIODIC = 1e-8
MAX_DOUBLINGS = 60


class StationaryError(ValueError):
    pass


@dataclass(frozen=True)
class StationaryResult:
    pi: QmcDensity
    pi_vec: np.ndarray
    residual: float
    faithful: bool
    min_block_eigenvalue: float


def _result(t: BlockSuperoperator, x: np.ndarray, tol_pos: float) -> StationaryResult:
    e = t.e_identity()
    n, k = t.n, t.k
    d = k * k
    blocks = []
    for i in range(n):
        b = x[i * d:(i + 1) * d].reshape(k, k)
        blocks.append((b + b.conj().T) / 2)
    pi_vec = np.concatenate([b.reshape(-1) for b in blocks])
    pi_vec = pi_vec / (e @ pi_vec)
    blocks = [pi_vec[i * d:(i + 1) * d].reshape(k, k) for i in range(n)]
    min_eig = min(hermitian_eigenvalues_small(b)[0] for b in blocks)
    residual = float(np.linalg.norm(t.matrix @ pi_vec - pi_vec))
    pi_vec.setflags(write=False)
    return StationaryResult(
        pi=QmcDensity(tuple(blocks), check=False),
        pi_vec=pi_vec,
        residual=residual,
        faithful=bool(min_eig > tol_pos),
        min_block_eigenvalue=float(min_eig),
    )


def _perturbed_fixed_point(t: BlockSuperoperator, tv, uv):
    e = t.e_identity()
    if abs(e @ tv) <= TOL_ADMISSIBLE:
        raise StationaryError("<e_I|t> = 0: t is not admissible")
    m = np.eye(t.order) - t.matrix + np.outer(tv, uv.conj())
    x = invert(m) @ tv
    denom = e @ x
    if abs(denom) <= TOL_ADMISSIBLE:
        raise SingularMatrixError("degenerate normalisation <e_I|(I-T+|t><u|)^-1|t>")
    return x / denom


def fixed_point(t: BlockSuperoperator, tv=None, uv=None, *, tol_fix: float = TOL_FIX,
                tol_pos: float = TOL_POS, retries: int = 8, seed: int = 0) -> StationaryResult:
    """Stationary density ``(I - T + |t><u|)^-1 |t>`` normalised to unit trace.

    Defaults to ``t = u = e_0``.  When the defaults give a singular system
    (``<u|pi> = 0``) up to ``retries`` random complex pairs are tried; an
    explicitly supplied pair is never replaced.
    """
    explicit = tv is not None or uv is not None
    n_ = t.order
    tv = basis_vector(n_) if tv is None else as_vector(tv, name="t")
    uv = basis_vector(n_) if uv is None else as_vector(uv, name="u")
    rng = np.random.default_rng(seed)
    attempts = 1 if explicit else 1 + retries
    last = None
    for _ in range(attempts):
        try:
            x = _perturbed_fixed_point(t, tv, uv)
            res = _result(t, x, tol_pos)
            if res.residual <= tol_fix:
                return res
            last = StationaryError(f"fixed-point residual {res.residual:.3e} exceeds {tol_fix:.1e}")
        except SingularMatrixError as exc:
            last = exc
        tv = rng.standard_normal(n_) + 1j * rng.standard_normal(n_)
        uv = rng.standard_normal(n_) + 1j * rng.standard_normal(n_)
    raise StationaryError(f"invalid (t, u) pair or reducible chain: {last}")


def fixed_point_via_ginverse(t: BlockSuperoperator, g, v=None, *, tol_fix: float = TOL_FIX,
                             tol_pos: float = TOL_POS, tol_ginv: float = 1e-9) -> StationaryResult:
    """Stationary density ``A|v> / <e_I|A v>`` with ``A = I - G(I - T)`` for a g-inverse ``G``."""
    from .ginverse import is_ginverse

    g = as_matrix(g, square=True, name="G")
    a_mat = np.eye(t.order) - t.matrix
    ok, resid = is_ginverse(a_mat, g, tol=tol_ginv)
    if not ok:
        raise StationaryError(f"G is not a g-inverse of I - T (residual {resid:.3e})")
    proj = np.eye(t.order) - g @ a_mat
    e = t.e_identity()
    candidates = [as_vector(v, name="v")] if v is not None else [basis_vector(t.order, i) for i in range(t.order)]
    for cand in candidates:
        av = proj @ cand
        denom = e @ av
        if abs(denom) > TOL_ADMISSIBLE:
            res = _result(t, av / denom, tol_pos)
            if res.residual > tol_fix:
                raise StationaryError(f"fixed-point residual {res.residual:.3e} exceeds {tol_fix:.1e}")
            return res
    raise StationaryError("<e_I|A v> = 0: choose another v")


def limit_operator(pi_vec, n: int, k: int) -> np.ndarray:
    """``Omega = |pi><e_I|``, the limit of ``T^m`` for an ergodic chain."""
    p = as_vector(pi_vec, name="pi")
    e = e_identity(n, k)
    if abs(e @ p - 1.0) > 1e-9:
        raise ValueError("pi must satisfy <e_I|pi> = 1")
    return np.outer(p, e)


@dataclass(frozen=True)
class Classification:
    irreducible: bool
    aperiodic: bool | None  # None: convergence test inconclusive
    kernel_dim: int
    min_block_eigenvalue: float | None
    doublings: int
    limit_distance: float | None
    evidence: str

    @property
    def ergodic(self) -> bool:
        return bool(self.irreducible and self.aperiodic is True)


def kernel_dimension(a, rtol: float = 1e-9, atol: float = 1e-12) -> int:
    """Nullity of ``a`` by QR with column pivoting.

    ``R`` diagonal entries at or below ``max(rtol ||a||_2, atol)`` count as zero.
    """
    a = as_matrix(a)
    if a.size == 0:
        return a.shape[1]
    r = scipy.linalg.qr(a, mode="r", pivoting=True)[0]
    diag = np.abs(np.diag(r))
    threshold = max(rtol * np.linalg.norm(a, 2), atol)
    return a.shape[1] - int(np.sum(diag > threshold))


def classify(t: BlockSuperoperator, *, tol_pos: float = TOL_POS, tol_aperiodic: float = TOL_APERIODIC,
             max_doublings: int = MAX_DOUBLINGS) -> Classification:
    """Irreducible: one-dimensional fixed space with a faithful fixed density.
    Aperiodic: ``T^(2^m)`` reaches the limit operator within ``max_doublings``.
    """
    eye = np.eye(t.order)
    kdim = kernel_dimension(eye - t.matrix)
    notes = [f"dim ker(I-T) = {kdim}"]
    min_eig = None
    omega = None
    irreducible = False
    if kdim == 1:
        try:
            st = fixed_point(t)
        except StationaryError as exc:
            notes.append(f"fixed point failed: {exc}")
        else:
            min_eig = st.min_block_eigenvalue
            irreducible = st.faithful
            notes.append(f"min eigenvalue of pi blocks = {min_eig:.3e}")
            if not st.faithful:
                notes.append("unique fixed density is not faithful")
            omega = limit_operator(st.pi_vec, t.n, t.k)

    m = t.matrix.copy()
    dists = []
    steps = []
    aperiodic: bool | None = None
    used = 0
    for level in range(max_doublings + 1):
        used = level
        if omega is not None:
            dist = float(np.linalg.norm(m - omega, 2))
            dists.append(dist)
            if dist <= tol_aperiodic:
                aperiodic = True
                break
        nxt = m @ m
        step = float(np.linalg.norm(nxt - m, 2))
        steps.append(step)
        if omega is None and step <= tol_aperiodic * max(1.0, np.linalg.norm(m, 2)):
            # powers settled; aperiodic iff the limit is absorbed by T
            aperiodic = bool(np.linalg.norm(t.matrix @ nxt - nxt, 2) <= 1e3 * tol_aperiodic)
            break
        m = nxt
    if aperiodic is None:
        if omega is not None and dists and dists[-1] >= 1e-3 and (
                len(dists) < 11 or dists[-1] > 0.5 * dists[-11]):
            aperiodic = False
        elif omega is None and steps and steps[-1] >= 1e-3:
            aperiodic = False
    limit_distance = dists[-1] if dists else None
    if aperiodic is True:
        notes.append(f"T^(2^m) converged after {used} doublings")
        if len(dists) >= 2 and dists[-2] > 0:
            rate = dists[-2] ** (1.0 / 2 ** (len(dists) - 2))
            notes.append(f"estimated subdominant modulus ~ {rate:.4g}")
    elif aperiodic is False:
        notes.append(f"T^(2^m) stays away from its limit after {used} doublings (periodic)")
    else:
        notes.append(f"iterates inconclusive after {used} doublings")
    return Classification(
        irreducible=irreducible,
        aperiodic=aperiodic,
        kernel_dim=kdim,
        min_block_eigenvalue=min_eig,
        doublings=used,
        limit_distance=limit_distance,
        evidence="; ".join(notes),
    )
