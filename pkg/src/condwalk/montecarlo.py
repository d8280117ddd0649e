"""Seeded Monte Carlo for killed walks.

Paths are simulated in fixed-size chunks; within a chunk dead paths are
compacted away after every step, and each draw comes from the counter-based
generator keyed by (seed, global path index, step). Chunk results are
merged in chunk order, so estimates do not depend on the worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .increments import IncrementLaw
from .rng import path_keys, uniforms_from_keys

CHUNK = 1 << 16
MIN_PATHS = 10_000


@dataclass(frozen=True)
class MCEstimate:
    value: float
    stderr: float
    paths: int
    seed: int
    n: int

    @classmethod
    def from_count(cls, count: int, paths: int, seed: int, n: int) -> "MCEstimate":
        p = count / paths
        return cls(p, math.sqrt(p * (1.0 - p) / paths), paths, seed, n)


@dataclass
class _ChunkResult:
    exits: np.ndarray  # exits[k] = number of paths killed at step k
    under_sum: float
    under_sq: float
    final: np.ndarray  # end positions of paths alive after the constrained steps


def _chunk_ranges(paths: int) -> list[tuple[int, int]]:
    return [(s, min(s + CHUNK, paths)) for s in range(0, paths, CHUNK)]


def _map_chunks(fn, paths: int, threads: int) -> list:
    ranges = _chunk_ranges(paths)
    if threads <= 1 or len(ranges) == 1:
        return [fn(a, b) for a, b in ranges]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda r: fn(*r), ranges))


def _simulate_chunk(law: IncrementLaw, x: float, n: int, constrained: int, seed: int, a: int, b: int) -> _ChunkResult:
    keys = path_keys(seed, np.arange(a, b, dtype=np.uint64))
    pos = np.full(b - a, float(x))
    exits = np.zeros(n + 1, dtype=np.int64)
    under_sum = under_sq = 0.0
    for k in range(n):
        if pos.size == 0:
            break
        pos = pos + law.quantile(uniforms_from_keys(keys, k))
        if k + 1 <= constrained:
            dead = pos < 0
            nd = int(np.count_nonzero(dead))
            if nd:
                exits[k + 1] = nd
                u = -pos[dead]
                under_sum += float(u.sum())
                under_sq += float(np.dot(u, u))
                alive = ~dead
                pos, keys = pos[alive], keys[alive]
    return _ChunkResult(exits, under_sum, under_sq, pos)


def simulate(law: IncrementLaw, x: float, n: int, constrained: int, paths: int, seed: int, threads: int = 1) -> _ChunkResult:
    """Run ``paths`` walks of n steps, killing below 0 during the first ``constrained`` steps."""
    if paths < 1:
        raise DomainError("paths must be positive")
    if n < 1:
        raise DomainError("n must be at least 1")
    parts = _map_chunks(lambda a, b: _simulate_chunk(law, x, n, constrained, seed, a, b), paths, threads)
    exits = np.zeros(n + 1, dtype=np.int64)
    under_sum = under_sq = 0.0
    for r in parts:
        exits += r.exits
        under_sum += r.under_sum
        under_sq += r.under_sq
    final = np.concatenate([r.final for r in parts])
    return _ChunkResult(exits, under_sum, under_sq, final)


def _check_paths(paths: int) -> None:
    if paths < MIN_PATHS:
        raise DomainError(f"at least {MIN_PATHS} paths are required")


def mc_joint_interval(law, x, y, v, n, paths, seed, threads: int = 1) -> MCEstimate:
    """P(x+S_n in [y, y+v), x+S_j >= 0 for j <= n-1)."""
    _check_paths(paths)
    if v < 0:
        raise DomainError("v must be nonnegative")
    res = simulate(law, x, n, n - 1, paths, seed, threads)
    count = int(np.count_nonzero((res.final >= y) & (res.final < y + v)))
    return MCEstimate.from_count(count, paths, seed, n)


def mc_joint_intervals(law, x, edges, n, paths, seed, threads: int = 1) -> list[MCEstimate]:
    """Estimates for consecutive intervals [edges[i], edges[i+1]) on one path set."""
    _check_paths(paths)
    res = simulate(law, x, n, n - 1, paths, seed, threads)
    counts, _ = np.histogram(res.final, bins=np.asarray(edges, dtype=float))
    # histogram closes the last bin on the right; recount it half-open
    counts[-1] = int(np.count_nonzero((res.final >= edges[-2]) & (res.final < edges[-1])))
    return [MCEstimate.from_count(int(c), paths, seed, n) for c in counts]


def mc_persistence(law, x, n, paths, seed, threads: int = 1) -> MCEstimate:
    """P(tau_x > n)."""
    _check_paths(paths)
    res = simulate(law, x, n, n, paths, seed, threads)
    return MCEstimate.from_count(len(res.final), paths, seed, n)


@dataclass(frozen=True)
class MCExitPmf:
    counts: np.ndarray  # counts[k] for k = 1..n (index 0 unused)
    survivors: int
    paths: int
    seed: int
    n: int

    def pmf(self) -> dict[int, MCEstimate]:
        return {k: MCEstimate.from_count(int(self.counts[k]), self.paths, self.seed, self.n) for k in range(1, self.n + 1)}

    @property
    def persistence(self) -> MCEstimate:
        return MCEstimate.from_count(self.survivors, self.paths, self.seed, self.n)


def mc_exit_pmf(law, x, n, paths, seed, threads: int = 1) -> MCExitPmf:
    """Histogram of tau_x over k <= n together with the survivors on the same paths."""
    _check_paths(paths)
    res = simulate(law, x, n, n, paths, seed, threads)
    return MCExitPmf(res.exits, len(res.final), paths, seed, n)


def _max_abs_chunk(law, n, u, seed, a, b) -> int:
    keys = path_keys(seed, np.arange(a, b, dtype=np.uint64))
    pos = np.zeros(b - a)
    hit = 0
    for k in range(n):
        if pos.size == 0:
            break
        pos = pos + law.quantile(uniforms_from_keys(keys, k))
        out = np.abs(pos) > u
        c = int(np.count_nonzero(out))
        if c:
            hit += c
            keep = ~out
            pos, keys = pos[keep], keys[keep]
    return hit


def mc_max_abs(law, n, u, paths, seed, threads: int = 1) -> MCEstimate:
    """P(max_{k<=n} |S_k| > u)."""
    _check_paths(paths)
    if not u > 0:
        raise DomainError("u must be positive")
    if u >= n * max(law.max_up, law.max_down):
        return MCEstimate(0.0, 0.0, paths, seed, n)
    hits = _map_chunks(lambda a, b: _max_abs_chunk(law, n, u, seed, a, b), paths, threads)
    return MCEstimate.from_count(sum(hits), paths, seed, n)


@dataclass(frozen=True)
class PartialMeanEstimate:
    """E(x+S_n; tau_x>n) via the undershoot identity, with the survival estimate."""

    value: float
    stderr: float
    survival: MCEstimate


def mc_partial_mean(law, x, n, paths, seed, threads: int = 1) -> PartialMeanEstimate:
    """Estimate W_n(x) = E(x + S_n; tau_x > n).

    Optional stopping of the martingale x + S_{k ^ tau} gives
    W_n(x) = x + E(U; tau_x <= n) with U = -(x + S_tau) the undershoot,
    which is bounded by the largest downward step, so the estimator has
    far smaller variance than averaging (x + S_n) 1{tau_x > n} directly.
    """
    _check_paths(paths)
    res = simulate(law, x, n, n, paths, seed, threads)
    mean = res.under_sum / paths
    var = max(res.under_sq / paths - mean * mean, 0.0)
    return PartialMeanEstimate(x + mean, math.sqrt(var / paths), MCEstimate.from_count(len(res.final), paths, seed, n))
