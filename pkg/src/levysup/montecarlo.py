"""Monte Carlo oracles for path suprema, first passage and the joint law.

Seeding contract: path i draws from its own Philox stream keyed by
(i << 64) | seed, so a path is the same whichever worker simulates it and
whatever block it falls in. Grid functionals of continuous-time families
are biased (suprema low, infima high); compound Poisson paths are simulated
exactly at their jump instants.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .models import CompoundPoissonDrift, LevyModel

BIASED_LOW = "biased-low"
UNBIASED = "unbiased"
_SEED_MAX = 2 ** 64 - 1


@dataclass(frozen=True)
class SimConfig:
    n_paths: int
    n_steps: int = 2 ** 13
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.n_paths < 1 or self.n_steps < 1 or self.workers < 1:
            raise ValueError("n_paths, n_steps and workers must be >= 1")
        if not 0 <= self.seed <= _SEED_MAX:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class McEstimate:
    value: float
    stderr: float
    n_paths: int
    bias_note: str


def path_generator(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=(index << 64) | seed))


def _estimate(hits: np.ndarray, bias_note: str) -> McEstimate:
    n = hits.size
    p = float(np.count_nonzero(hits)) / n
    return McEstimate(p, math.sqrt(p * (1.0 - p) / n), n, bias_note)


def _grid_chunk(m: LevyModel, T: float, n_steps: int, seed: int, start: int, stop: int) -> np.ndarray:
    """Running max, running min and terminal value of X on the grid kT/n_steps
    (X(0) = 0 included) for paths start..stop-1."""
    dt = T / n_steps
    out = np.empty((stop - start, 3))
    for row, i in enumerate(range(start, stop)):
        x = np.cumsum(m.sample_increment(dt, path_generator(seed, i), n_steps))
        out[row] = (max(x.max(), 0.0), min(x.min(), 0.0), x[-1])
    return out


def _exact_jump_chunk(m: CompoundPoissonDrift, T: float, seed: int, start: int, stop: int) -> np.ndarray:
    """Supremum of J(t) - c t over [0, T]; between jumps the path drifts down,
    so the supremum is attained at 0 or just after a jump."""
    out = np.empty(stop - start)
    for row, i in enumerate(range(start, stop)):
        rng = path_generator(seed, i)
        n = rng.poisson(m.lam * T)
        if n == 0:
            out[row] = 0.0
            continue
        times = np.sort(rng.uniform(0.0, T, n))
        level = np.cumsum(rng.exponential(1.0 / m.mu_rate, n)) - m.c * times
        out[row] = max(level.max(), 0.0)
    return out


def _run_chunks(fn, args: tuple, n_paths: int, workers: int) -> np.ndarray:
    if workers == 1 or n_paths < 2 * workers:
        return fn(*args, 0, n_paths)
    edges = np.linspace(0, n_paths, workers + 1).astype(int)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, *args, int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]
        # Concatenate in path order, so the schedule never matters.
        return np.concatenate([f.result() for f in futures])


@lru_cache(maxsize=8)
def grid_extremes(m: LevyModel, T: float, cfg: SimConfig) -> np.ndarray:
    """(n_paths, 3) array of grid max, min and terminal value of X; cached so
    several functionals of one simulation share the draw."""
    if isinstance(m, CompoundPoissonDrift):
        raise TypeError("compound Poisson paths are simulated exactly; use mc_sup_prob_exact_jumps")
    out = _run_chunks(_grid_chunk, (m, float(T), cfg.n_steps, cfg.seed), cfg.n_paths, cfg.workers)
    out.setflags(write=False)
    return out


def _check(T: float):
    if not T > 0:
        raise ValueError(f"horizon must be positive, got {T}")


def mc_sup_prob(m: LevyModel, u: float, T: float, cfg: SimConfig) -> McEstimate:
    """Fraction of paths whose grid maximum exceeds u."""
    _check(T)
    if u < 0:
        return McEstimate(1.0, 0.0, cfg.n_paths, UNBIASED)
    if isinstance(m, CompoundPoissonDrift):
        return mc_sup_prob_exact_jumps(m, u, T, cfg)
    return _estimate(grid_extremes(m, T, cfg)[:, 0] > u, BIASED_LOW)


def mc_sup_prob_exact_jumps(m: CompoundPoissonDrift, u: float, T: float, cfg: SimConfig) -> McEstimate:
    _check(T)
    if not isinstance(m, CompoundPoissonDrift):
        raise TypeError("exact-jump simulation needs a CompoundPoissonDrift model")
    sups = _run_chunks(_exact_jump_chunk, (m, float(T), cfg.seed), cfg.n_paths, cfg.workers)
    return _estimate(sups > u, UNBIASED)


def _y_extremes(m: LevyModel, T: float, cfg: SimConfig):
    """Grid max, min and terminal value of the spectrally negative Y."""
    ext = grid_extremes(m, T, cfg)
    if m.y_sign < 0:
        return -ext[:, 1], -ext[:, 0], -ext[:, 2]
    return ext[:, 0], ext[:, 1], ext[:, 2]


def mc_first_passage(m: LevyModel, z: float, T: float, cfg: SimConfig) -> McEstimate:
    """Fraction of paths of Y whose grid maximum exceeds z by time T."""
    _check(T)
    if z < 0:
        return McEstimate(1.0, 0.0, cfg.n_paths, UNBIASED)
    y_max, _, _ = _y_extremes(m, T, cfg)
    return _estimate(y_max > z, BIASED_LOW)


def mc_joint_inf_terminal(m: LevyModel, x: float, z_bins, T: float, cfg: SimConfig) -> list[McEstimate]:
    """Per-bin frequency of {grid inf of Y < -x and Y(T) + x in (b_i, b_i+1]}."""
    _check(T)
    edges = np.asarray(z_bins, dtype=float)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0) or edges[0] < 0:
        raise ValueError("z_bins must be strictly increasing non-negative bin edges")
    _, y_min, y_end = _y_extremes(m, T, cfg)
    crossed = y_min < -x
    shifted = y_end + x
    return [_estimate(crossed & (shifted > lo) & (shifted <= hi), BIASED_LOW)
            for lo, hi in zip(edges[:-1], edges[1:])]


__all__ = [
    "SimConfig",
    "McEstimate",
    "BIASED_LOW",
    "UNBIASED",
    "path_generator",
    "grid_extremes",
    "mc_sup_prob",
    "mc_sup_prob_exact_jumps",
    "mc_first_passage",
    "mc_joint_inf_terminal",
]
