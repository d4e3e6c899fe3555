"""Generalized inverses of ``I - T``.

A g-inverse of ``A`` is any ``X`` with ``A X A = A``.  For an irreducible
chain, ``(I - T + |t><u|)^-1`` is one whenever ``<e_I|t> != 0`` and
``<u|pi> != 0``; every other g-inverse is reached from it through one of
three parametrisations (``family_a`` with a matrix ``H``, ``family_b`` with
matrices ``F, G``, ``family_c`` with vectors ``f, g``).  The fundamental
matrix ``Z = (I - T + Omega)^-1`` is the member with ``t = pi``, ``u = e_I``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .linalg import SingularMatrixError, as_matrix, as_vector, basis_vector, invert
from .model import BlockSuperoperator

TOL_GINV = 1e-9
TOL_ADMISSIBLE = 1e-10

Variant = Literal["perturbation", "family_a", "family_b", "family_c", "fundamental"]


class InadmissibleError(ValueError):
    pass


@dataclass(frozen=True)
class GInverseForm:
    variant: Variant
    t: np.ndarray | None = None
    u: np.ndarray | None = None
    H: np.ndarray | None = None
    F: np.ndarray | None = None
    G: np.ndarray | None = None
    f: np.ndarray | None = None
    g: np.ndarray | None = None


def block_identity(n: int, k: int) -> np.ndarray:
    """``E``: the ``n x n`` grid whose every block is ``I_{k^2}``."""
    d = k * k
    return np.kron(np.ones((n, n)), np.eye(d)).astype(complex)


def block_diagonal(x, n: int, k: int) -> np.ndarray:
    """``X_d``: keep the diagonal ``k^2 x k^2`` blocks of ``x``, zero the rest."""
    x = as_matrix(x, square=True)
    d = k * k
    out = np.zeros_like(x)
    for i in range(n):
        sl = slice(i * d, (i + 1) * d)
        out[sl, sl] = x[sl, sl]
    return out


def is_ginverse(a, x, tol: float = TOL_GINV) -> tuple[bool, float]:
    """Check ``A X A = A``; residual is ``||AXA - A||_inf / max(1, ||A||_inf)``."""
    a = as_matrix(a)
    x = as_matrix(x)
    if x.shape != (a.shape[1], a.shape[0]):
        raise ValueError(f"shape mismatch: A {a.shape}, X {x.shape}")
    resid = np.linalg.norm(a @ x @ a - a, np.inf) / max(1.0, np.linalg.norm(a, np.inf))
    return bool(resid <= tol), float(resid)


def perturbation_inverse(t: BlockSuperoperator, tv, uv) -> np.ndarray:
    """``(I - T + |t><u|)^-1``."""
    tv = as_vector(tv, name="t")
    uv = as_vector(uv, name="u")
    if abs(t.e_identity() @ tv) <= TOL_ADMISSIBLE:
        raise InadmissibleError("<e_I|t> = 0")
    try:
        return invert(np.eye(t.order) - t.matrix + np.outer(tv, uv.conj()))
    except SingularMatrixError as exc:
        raise InadmissibleError(f"I - T + |t><u| is singular: <u|pi> = 0 or the chain is reducible ({exc})") from exc


def fundamental_matrix(t: BlockSuperoperator, omega) -> np.ndarray:
    """``Z = (I - T + Omega)^-1``."""
    omega = as_matrix(omega, square=True, name="Omega")
    try:
        return invert(np.eye(t.order) - t.matrix + omega)
    except SingularMatrixError as exc:
        raise InadmissibleError(f"I - T + Omega is singular: chain is not ergodic ({exc})") from exc


def _check_shape(name, m, shape):
    if m is None:
        return None
    m = np.array(m, dtype=complex)
    if m.shape != shape:
        raise ValueError(f"{name} has shape {m.shape}, expected {shape}")
    return m


def ginverse_from_form(t: BlockSuperoperator, pi_vec, form: GInverseForm) -> np.ndarray:
    """Assemble the g-inverse of ``I - T`` described by ``form``."""
    size = t.order
    pi_vec = as_vector(pi_vec, name="pi")
    e = t.e_identity()
    if form.variant == "fundamental":
        return fundamental_matrix(t, np.outer(pi_vec, e))

    tv = basis_vector(size) if form.t is None else as_vector(form.t, name="t")
    uv = basis_vector(size) if form.u is None else as_vector(form.u, name="u")
    et = e @ tv
    upi = np.vdot(uv, pi_vec)
    if abs(et) <= TOL_ADMISSIBLE:
        raise InadmissibleError("<e_I|t> = 0")
    if abs(upi) <= TOL_ADMISSIBLE:
        raise InadmissibleError("<u|pi> = 0")
    base = perturbation_inverse(t, tv, uv)
    p_t = np.outer(tv, e) / et  # |t><e_I| / <e_I|t>
    p_pi = np.outer(pi_vec, uv.conj()) / upi  # |pi><u| / <u|pi>
    sq = (size, size)

    if form.variant == "perturbation":
        return base
    if form.variant == "family_a":
        h = _check_shape("H", form.H, sq)
        if h is None:
            return base
        return base + h @ p_t + p_pi @ h - p_pi @ h @ p_t
    if form.variant == "family_b":
        f_mat = _check_shape("F", form.F, sq)
        g_mat = _check_shape("G", form.G, sq)
        out = base.copy()
        if f_mat is not None:
            out += p_pi @ f_mat
        if g_mat is not None:
            out += g_mat @ p_t
        return out
    if form.variant == "family_c":
        f_vec = _check_shape("f", form.f, (size,))
        g_vec = _check_shape("g", form.g, (size,))
        out = base.copy()
        if f_vec is not None:
            out += np.outer(pi_vec, f_vec.conj())
        if g_vec is not None:
            out += np.outer(g_vec, e)
        return out
    raise ValueError(f"unknown g-inverse variant {form.variant!r}")


def _cgauss(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_forms(size: int, count: int, seed: int = 0, scale: float = 0.3) -> list[GInverseForm]:
    """``count`` random members cycling through families a, b and c.

    ``t`` and ``u`` are drawn near ``e_0`` so the perturbed matrix stays well
    conditioned; the free parameters are complex Gaussian times ``scale``.
    """
    rng = np.random.default_rng(seed)
    out = []
    variants = ("family_a", "family_b", "family_c")
    for idx in range(count):
        tv = basis_vector(size) + 0.2 * _cgauss(rng, size)
        uv = basis_vector(size) + 0.2 * _cgauss(rng, size)
        variant = variants[idx % 3]
        if variant == "family_a":
            out.append(GInverseForm(variant, t=tv, u=uv, H=scale * _cgauss(rng, (size, size))))
        elif variant == "family_b":
            out.append(GInverseForm(variant, t=tv, u=uv, F=scale * _cgauss(rng, (size, size)),
                                    G=scale * _cgauss(rng, (size, size))))
        else:
            out.append(GInverseForm(variant, t=tv, u=uv, f=scale * _cgauss(rng, size),
                                    g=scale * _cgauss(rng, size)))
    return out
