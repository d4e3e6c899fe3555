"""Dense complex linear algebra used throughout the package.

Matrices and vectors are plain ``numpy`` arrays of dtype ``complex128``.
The ``vec`` isomorphism stacks matrix *rows* (C order), so the matrix of the
conjugation ``X -> V X V^dagger`` is ``kron(V, conj(V))``.  Libraries that
stack columns get ``kron(conj(V), V)`` instead; do not mix the two.
"""
from __future__ import annotations

import math
import warnings

import numpy as np
import scipy.linalg

#: relative pivot threshold for LU: a pivot below ``PIVOT_RTOL * max row norm``
#: is treated as zero.
PIVOT_RTOL = 1e-12
#: condition numbers above this emit :class:`IllConditionedWarning`.
COND_CAP = 1e12
#: largest order accepted by the cofactor (minor-determinant) adjugate path.
MAX_COFACTOR_ORDER = 12
#: largest order accepted by the Jacobi eigenvalue routine.
MAX_JACOBI_ORDER = 16


class SingularMatrixError(np.linalg.LinAlgError):
    """Raised when an LU pivot falls below the singularity threshold."""


class IllConditionedWarning(RuntimeWarning):
    pass


class ConvergenceWarning(RuntimeWarning):
    pass


def as_matrix(a, *, square: bool = False, name: str = "matrix") -> np.ndarray:
    """Coerce ``a`` to a finite 2-d complex array."""
    m = np.array(a, dtype=complex)
    if m.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {m.shape}")
    if square and m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    return m


def as_vector(v, *, name: str = "vector") -> np.ndarray:
    x = np.array(v, dtype=complex)
    if x.ndim != 1:
        raise ValueError(f"{name} must be 1-dimensional, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} has non-finite entries")
    return x


def basis_vector(dim: int, index: int = 0) -> np.ndarray:
    e = np.zeros(dim, dtype=complex)
    e[index] = 1.0
    return e


def vec(a) -> np.ndarray:
    """Row-stacking vectorisation: ``[[a, b], [c, d]] -> [a, b, c, d]``."""
    return as_matrix(a).reshape(-1).copy()


def unvec(v, k: int) -> np.ndarray:
    """Inverse of :func:`vec` for a ``k x k`` matrix."""
    x = as_vector(v)
    if x.shape[0] != k * k:
        raise ValueError(f"cannot unvec a vector of length {x.shape[0]} into {k}x{k}")
    return x.reshape(k, k).copy()


def kron(a, b) -> np.ndarray:
    return np.kron(as_matrix(a), as_matrix(b))


def superop_of_kraus(kraus) -> np.ndarray:
    """Matrix ``sum_l V_l (x) conj(V_l)`` of the CP map ``X -> sum_l V_l X V_l^dagger``.

    Acts on row-stacked vectors: ``unvec(M @ vec(X)) == sum_l V_l X V_l^dagger``.
    """
    ops = [as_matrix(v, square=True, name="Kraus operator") for v in kraus]
    if not ops:
        raise ValueError("empty Kraus list")
    k = ops[0].shape[0]
    if any(v.shape != (k, k) for v in ops):
        raise ValueError("Kraus operators must all have the same order")
    out = np.zeros((k * k, k * k), dtype=complex)
    for v in ops:
        out += np.kron(v, v.conj())
    return out


def _lu(a: np.ndarray, pivot_rtol: float):
    rownorm = np.max(np.sum(np.abs(a), axis=1)) if a.size else 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(a, check_finite=False)
    pivots = np.abs(np.diag(lu))
    threshold = pivot_rtol * rownorm
    if rownorm == 0.0 or pivots.min() <= threshold:
        raise SingularMatrixError(
            f"matrix is singular to tolerance (smallest pivot {pivots.min():.3e}, "
            f"threshold {threshold:.3e})"
        )
    return lu, piv


def _check_condition(a, inv, cond_cap):
    cond = np.linalg.norm(a, 1) * np.linalg.norm(inv, 1)
    if cond > cond_cap:
        warnings.warn(
            f"ill-conditioned matrix (1-norm condition {cond:.3e} > {cond_cap:.1e})",
            IllConditionedWarning,
            stacklevel=3,
        )


def solve(a, b, *, pivot_rtol: float = PIVOT_RTOL, cond_cap: float = COND_CAP) -> np.ndarray:
    """Solve ``a @ x = b`` by LU with partial pivoting."""
    a = as_matrix(a, square=True)
    rhs = np.array(b, dtype=complex)
    if rhs.shape[0] != a.shape[0]:
        raise ValueError(f"shape mismatch: {a.shape} vs {rhs.shape}")
    lu, piv = _lu(a, pivot_rtol)
    x = scipy.linalg.lu_solve((lu, piv), rhs, check_finite=False)
    if cond_cap is not None and np.isfinite(cond_cap):
        inv = scipy.linalg.lu_solve((lu, piv), np.eye(a.shape[0]), check_finite=False)
        _check_condition(a, inv, cond_cap)
    return x


def invert(a, *, pivot_rtol: float = PIVOT_RTOL, cond_cap: float = COND_CAP) -> np.ndarray:
    """Inverse via LU with partial pivoting.

    Raises :class:`SingularMatrixError` when a pivot is below
    ``pivot_rtol`` times the largest absolute row sum, and warns with
    :class:`IllConditionedWarning` when the 1-norm condition exceeds ``cond_cap``.
    """
    a = as_matrix(a, square=True)
    lu, piv = _lu(a, pivot_rtol)
    inv = scipy.linalg.lu_solve((lu, piv), np.eye(a.shape[0], dtype=complex), check_finite=False)
    if cond_cap is not None:
        _check_condition(a, inv, cond_cap)
    return inv


def _det_lu(a: np.ndarray) -> complex:
    if a.shape[0] == 0:
        return 1.0 + 0j
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(a, check_finite=False)
    sign = (-1) ** int(np.sum(piv != np.arange(a.shape[0])))
    return complex(sign * np.prod(np.diag(lu)))


def det_and_adjugate(a, *, pivot_rtol: float = PIVOT_RTOL,
                     max_cofactor_order: int = MAX_COFACTOR_ORDER) -> tuple[complex, np.ndarray]:
    """Determinant and adjugate ``adj(A)``, with ``A adj(A) = det(A) I``.

    Nonsingular inputs use ``adj = det * inv``; singular ones fall back to
    the cofactor definition ``adj_ij = (-1)^(i+j) M_ji`` with each minor
    determinant taken by LU.
    """
    a = as_matrix(a, square=True)
    n = a.shape[0]
    if n == 0:
        return 1.0 + 0j, np.zeros((0, 0), dtype=complex)
    if n == 1:
        return complex(a[0, 0]), np.ones((1, 1), dtype=complex)
    try:
        lu, piv = _lu(a, pivot_rtol)
    except SingularMatrixError:
        pass
    else:
        sign = (-1) ** int(np.sum(piv != np.arange(n)))
        det = complex(sign * np.prod(np.diag(lu)))
        inv = scipy.linalg.lu_solve((lu, piv), np.eye(n, dtype=complex), check_finite=False)
        return det, det * inv
    if n > max_cofactor_order:
        raise ValueError(f"cofactor adjugate limited to order {max_cofactor_order}, got {n}")
    adj = np.empty((n, n), dtype=complex)
    idx = np.arange(n)
    for i in range(n):
        for j in range(n):
            minor = a[np.ix_(idx != j, idx != i)]
            adj[i, j] = (-1) ** (i + j) * _det_lu(minor)
    return _det_lu(a), adj


def spectral_radius(a, *, rtol: float = 1e-6, max_doublings: int = 64,
                    restarts: int = 4, power_steps: int = 200, seed: int = 0) -> float:
    """Estimate ``max |eigenvalue|``.

    Power iteration from a few random starts gives a first estimate; the
    result is the Gelfand limit ``||A^(2^m)||^(1/2^m)`` computed by repeated
    squaring with the scale tracked in log space.  Warns with
    :class:`ConvergenceWarning` and returns the best estimate if the doubling
    sequence has not settled to ``rtol``.
    """
    a = as_matrix(a, square=True)
    n = a.shape[0]
    if n == 0 or not np.any(a):
        return 0.0

    rng = np.random.default_rng(seed)
    power = 0.0
    for _ in range(restarts):
        x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        x /= np.linalg.norm(x)
        growth = 0.0
        for _ in range(power_steps):
            y = a @ x
            growth = np.linalg.norm(y)
            if growth == 0.0:
                break
            x = y / growth
        power = max(power, growth)

    m = a.copy()
    log_scale = 0.0
    prev = np.linalg.norm(m, 2)
    for level in range(1, max_doublings + 1):
        nrm = np.linalg.norm(m, 2)
        if nrm == 0.0:
            return 0.0
        log_scale += math.log(nrm)
        m = m / nrm
        m = m @ m
        log_scale *= 2.0
        top = np.linalg.norm(m, 2)
        if top == 0.0:
            return 0.0
        est = math.exp((log_scale + math.log(top)) / 2.0 ** level)
        if abs(est - prev) <= 0.1 * rtol * max(est, 1e-300):
            return float(est)
        prev = est
    warnings.warn(
        f"spectral radius did not converge; best Gelfand bound {prev:.6g} "
        f"(power iteration {power:.6g})",
        ConvergenceWarning,
        stacklevel=2,
    )
    return float(prev)


def hermitian_eigenvalues_small(a, *, herm_tol: float = 1e-10, off_tol: float = 1e-12,
                                max_sweeps: int = 60) -> list[float]:
    """Eigenvalues of a small Hermitian matrix by cyclic complex Jacobi sweeps."""
    a = as_matrix(a, square=True)
    n = a.shape[0]
    if n > MAX_JACOBI_ORDER:
        raise ValueError(f"order {n} exceeds the Jacobi limit {MAX_JACOBI_ORDER}")
    scale = max(1.0, float(np.max(np.abs(a)))) if n else 1.0
    if np.max(np.abs(a - a.conj().T), initial=0.0) > herm_tol * scale:
        raise ValueError("matrix is not Hermitian to tolerance")
    h = (a + a.conj().T) / 2
    for _ in range(max_sweeps):
        off = float(np.linalg.norm(h - np.diag(np.diag(h))))
        if off <= off_tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = h[p, q]
                r = abs(apq)
                if r <= 1e-300:
                    continue
                phase = apq / r
                t = 0.5 * math.atan2(2.0 * r, h[p, p].real - h[q, q].real)
                c, s = math.cos(t), math.sin(t)
                # W = diag(1, conj(phase)) @ [[c, -s], [s, c]]
                w = np.array([[c, -s], [s * phase.conjugate(), c * phase.conjugate()]])
                cols = [p, q]
                h[:, cols] = h[:, cols] @ w
                h[cols, :] = w.conj().T @ h[cols, :]
    else:
        warnings.warn("Jacobi sweeps did not reach the off-diagonal tolerance",
                      ConvergenceWarning, stacklevel=2)
    return sorted(float(x) for x in np.diag(h).real)
