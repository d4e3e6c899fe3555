"""Monte Carlo quantum trajectories for hitting statistics.

Each step measures the vertex: from vertex ``j`` with internal state
``rho`` the walker moves to ``i`` with probability ``Tr(Phi_ij(rho))`` and
continues with ``Phi_ij(rho) / Tr(Phi_ij(rho))``.  The hitting time is the
first step ``m >= 1`` at which the target is observed.

Trajectories are simulated in fixed-size chunks.  Chunk ``c`` draws from its
own generator seeded by ``(seed, c)`` and trajectory ``s`` of the chunk uses
the ``s``-th uniform of every step's draw, so the outcome depends only on
``(seed, samples, chunk)`` and not on how chunks are spread over workers.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .model import QmcModel, block_matrix

DEAD_STATE_TOL = 1e-14
DEFAULT_CHUNK = 4096


class DeadStateError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrajectoryConfig:
    samples: int = 100_000
    max_steps: int = 1_000_000
    seed: int = 0
    workers: int = 1
    chunk: int = DEFAULT_CHUNK

    def __post_init__(self):
        if self.samples < 1 or self.max_steps < 1 or self.workers < 1 or self.chunk < 1:
            raise ValueError("samples, max_steps, workers and chunk must all be >= 1")


@dataclass(frozen=True)
class HittingEstimate:
    mean: float  # over trajectories that hit; nan if none did
    stderr: float
    hit_fraction: float
    censored: int
    samples: int

    def within(self, value: float, sigmas: float = 4.0) -> bool:
        return abs(self.mean - value) <= sigmas * self.stderr


@dataclass(frozen=True)
class _Moments:
    """Exact integer accumulators; merging is associative and commutative."""

    hits: int = 0
    total: int = 0
    total_sq: int = 0
    censored: int = 0

    def merge(self, other: "_Moments") -> "_Moments":
        return _Moments(self.hits + other.hits, self.total + other.total,
                        self.total_sq + other.total_sq, self.censored + other.censored)


def _choose(cum: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Index of the first cumulative bucket above ``u``; leftover mass goes to the last live bucket."""
    idx = np.sum(cum <= u[:, None], axis=1)
    n = cum.shape[1]
    over = idx >= n
    if np.any(over):
        widths = np.diff(np.concatenate([np.zeros((cum.shape[0], 1)), cum], axis=1), axis=1)
        last_live = n - 1 - np.argmax((widths[:, ::-1] > 0), axis=1)
        idx = np.where(over, last_live, idx)
    return idx


def step_sample(model: QmcModel, j: int, rho, rng) -> tuple[int, np.ndarray]:
    """One measured step from vertex ``j`` with state ``rho``.

    ``rng`` only needs a ``random()`` method returning a uniform in ``[0, 1)``.
    """
    rho = np.asarray(rho, dtype=complex)
    images = [model.apply_map(i, j, rho) for i in range(model.n)]
    probs = np.array([np.trace(x).real for x in images])
    if np.all(probs < DEAD_STATE_TOL):
        raise DeadStateError(f"no transition out of vertex {j} has positive probability")
    if abs(probs.sum() - 1.0) > 1e-8:
        raise ValueError(f"transition probabilities sum to {probs.sum():.12g}, not 1")
    probs = np.clip(probs, 0.0, None)
    cum = np.cumsum(probs)[None, :]
    i = int(_choose(cum, np.array([rng.random()]))[0])
    nxt = images[i] / probs[i]
    return i, (nxt + nxt.conj().T) / 2


def _chunk_generator(seed: int, chunk_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(chunk_index,))))


def _run_chunk(args) -> _Moments:
    tmat, n, k, start, rho0, target, size, max_steps, seed, chunk_index = args
    d = k * k
    rng = _chunk_generator(seed, chunk_index)
    diag = np.arange(k) * (k + 1)
    # columns of T for each source vertex, laid out as (n*d, d) -> used as vecs @ cols.T
    cols = [np.ascontiguousarray(tmat[:, j * d:(j + 1) * d].T) for j in range(n)]
    ids = np.arange(size)
    vert = np.full(size, start)
    state = np.tile(np.asarray(rho0, dtype=complex).reshape(-1), (size, 1))
    moments = _Moments()
    for step in range(1, max_steps + 1):
        u_all = rng.random(size)
        u = u_all[ids]
        new_vert = np.empty_like(vert)
        new_state = np.empty_like(state)
        for j in range(n):
            sel = np.nonzero(vert == j)[0]
            if sel.size == 0:
                continue
            images = (state[sel] @ cols[j]).reshape(sel.size, n, d)
            probs = np.clip(images[:, :, diag].sum(axis=2).real, 0.0, None)
            if np.any(probs.sum(axis=1) < DEAD_STATE_TOL):
                raise DeadStateError(f"no transition out of vertex {j} has positive probability")
            choice = _choose(np.cumsum(probs, axis=1), u[sel])
            picked = images[np.arange(sel.size), choice] / probs[np.arange(sel.size), choice][:, None]
            m = picked.reshape(sel.size, k, k)
            m = (m + np.conj(np.swapaxes(m, 1, 2))) / 2
            new_vert[sel] = choice
            new_state[sel] = m.reshape(sel.size, d)
        hit = new_vert == target
        nh = int(np.count_nonzero(hit))
        if nh:
            moments = moments.merge(_Moments(nh, nh * step, nh * step * step, 0))
        keep = ~hit
        ids, vert, state = ids[keep], new_vert[keep], new_state[keep]
        if ids.size == 0:
            break
    return moments.merge(_Moments(censored=int(ids.size)))


def _estimate(moments: _Moments, samples: int) -> HittingEstimate:
    h = moments.hits
    if h == 0:
        mean, stderr = math.nan, math.nan
    else:
        mean = moments.total / h
        if h > 1:
            var = (moments.total_sq - moments.total * moments.total / h) / (h - 1)
            stderr = math.sqrt(max(var, 0.0) / h)
        else:
            stderr = math.inf
    return HittingEstimate(mean=mean, stderr=stderr, hit_fraction=h / samples,
                           censored=moments.censored, samples=samples)


def estimate_hitting(model: QmcModel, start: tuple[int, np.ndarray], target: int,
                     cfg: TrajectoryConfig = TrajectoryConfig()) -> HittingEstimate:
    """Empirical mean first-visit time to ``target`` from ``start = (j, rho_j)``.

    With ``target == j`` this is the mean return time.  Censored runs (no hit
    within ``cfg.max_steps``) are counted and excluded from the mean.
    """
    j, rho = start
    rho = np.asarray(rho, dtype=complex)
    if not (0 <= j < model.n and 0 <= target < model.n):
        raise IndexError("vertex out of range")
    if rho.shape != (model.k, model.k):
        raise ValueError(f"start density must be {model.k}x{model.k}")
    tmat = np.array(block_matrix(model).matrix)
    jobs = []
    for c, lo in enumerate(range(0, cfg.samples, cfg.chunk)):
        size = min(cfg.chunk, cfg.samples - lo)
        jobs.append((tmat, model.n, model.k, j, rho, target, size, cfg.max_steps, cfg.seed, c))
    if cfg.workers == 1 or len(jobs) == 1:
        parts = [_run_chunk(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            parts = list(pool.map(_run_chunk, jobs))
    total = _Moments()
    for part in parts:
        total = total.merge(part)
    return _estimate(total, cfg.samples)
