"""Counter-based uniforms keyed by (seed, path, step).

Every draw is a pure function of its key, so a path set is reproduced
exactly regardless of chunking, compaction of dead paths or worker count.
The mixer is the SplitMix64 finaliser; each path gets its own stream key
and the step index walks that stream with a Weyl increment.
"""

from __future__ import annotations

import numpy as np

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_PATH_GAMMA = np.uint64(0xD1B54A32D192ED03)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30, _S27, _S31, _S11 = (np.uint64(k) for k in (30, 27, 31, 11))
_INV53 = 1.0 / 9007199254740992.0


def mix64(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> _S30)) * _M1
        z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def derive_seed(seed: int, *counters: int) -> int:
    """Deterministic child seed, e.g. for (config seed, grid cell)."""
    z = np.uint64(seed % 2**64)
    with np.errstate(over="ignore"):
        for c in counters:
            z = mix64(np.array([z + np.uint64(c % 2**64) * _GAMMA + _PATH_GAMMA]))[0]
    return int(z)


def path_keys(seed: int, paths: np.ndarray) -> np.ndarray:
    """Per-path stream keys."""
    base = mix64(np.array([np.uint64(seed % 2**64)]))[0]
    with np.errstate(over="ignore"):
        return mix64(base + np.asarray(paths, dtype=np.uint64) * _PATH_GAMMA)


def uniforms_from_keys(keys: np.ndarray, step: int) -> np.ndarray:
    """Uniforms in (0, 1) with 53-bit resolution for the given step."""
    with np.errstate(over="ignore"):
        z = mix64(keys + np.uint64(step + 1) * _GAMMA)
    return ((z >> _S11).astype(np.float64) + 0.5) * _INV53


def uniforms(seed: int, paths: np.ndarray, step: int) -> np.ndarray:
    return uniforms_from_keys(path_keys(seed, paths), step)
