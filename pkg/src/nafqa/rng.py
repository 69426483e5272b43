"""Counter-based random substreams for reproducible Monte Carlo.

Each draw is a pure function of (seed, stream, item, step, draw): trajectory
``item`` always sees the same numbers no matter how many trajectories run or
in what order, so ensembles are bit-reproducible and chunk/thread layout
cannot reshuffle them.  The mixer is the SplitMix64 finalizer.
"""
from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)

# Fixed stream tags so different consumers never collide on a counter.
STREAM_JUMPS = 1
STREAM_QPD = 2
STREAM_SHOTS = 3
STREAM_COUPLINGS = 4


def _mix(h: np.ndarray) -> np.ndarray:
    h = h.copy()
    h ^= h >> np.uint64(30)
    h *= _MIX1
    h ^= h >> np.uint64(27)
    h *= _MIX2
    h ^= h >> np.uint64(31)
    return h


def _fold(h: np.ndarray, value) -> np.ndarray:
    return _mix(h + _GOLDEN + np.uint64(np.asarray(value, dtype=np.uint64)))


def uniforms(seed: int, stream: int, items, step: int = 0, draw: int = 0) -> np.ndarray:
    """Uniform [0,1) doubles, one per entry of ``items`` (int array-like)."""
    items = np.atleast_1d(np.asarray(items, dtype=np.uint64))
    h = np.full(items.shape, np.uint64(seed), dtype=np.uint64)
    h = _fold(h, np.uint64(stream))
    h = _mix(h + _GOLDEN * (items + np.uint64(1)))
    h = _fold(h, np.uint64(step))
    h = _fold(h, np.uint64(draw))
    return (h >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


def uniform(seed: int, stream: int, item: int, step: int = 0, draw: int = 0) -> float:
    return float(uniforms(seed, stream, [item], step, draw)[0])
