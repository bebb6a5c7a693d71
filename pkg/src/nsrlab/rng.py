"""Counter-based random streams.

Every draw is a pure function of (seed, stream, rollout, step, coordinate), so
results do not depend on how rollouts are chunked or ordered.  Uniforms come
from a SplitMix64-style finalizer applied to a mixed key; normals are obtained
by the inverse normal CDF.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLD = np.uint64(0x9E3779B97F4A7C15)
_MASK = (1 << 64) - 1


def _mix(x: np.ndarray) -> np.ndarray:
    x = x ^ (x >> np.uint64(30))
    x = x * _M1
    x = x ^ (x >> np.uint64(27))
    x = x * _M2
    return x ^ (x >> np.uint64(31))


def _u64(v) -> np.uint64:
    return np.uint64(int(v) & _MASK)


def hash_counter(seed: int, stream: int, rollout, step: int, coord) -> np.ndarray:
    """64-bit hash of the key; ``rollout`` and ``coord`` broadcast."""
    with np.errstate(over="ignore"):
        h = _mix(_u64(seed) + _GOLD)
        h = _mix(h ^ (_u64(stream) + _GOLD))
        r = np.asarray(rollout, dtype=np.uint64)
        h = _mix(h ^ (r + _GOLD))
        h = _mix(h ^ (_u64(step) + _GOLD))
        c = np.asarray(coord, dtype=np.uint64)
        return _mix(h ^ (c + _GOLD))


def uniforms(seed: int, stream: int, rollout, step: int, coord) -> np.ndarray:
    """Uniforms strictly inside (0, 1) from the top 53 bits of the hash."""
    h = hash_counter(seed, stream, rollout, step, coord)
    return ((h >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


@dataclass(frozen=True)
class CounterRNG:
    seed: int
    stream: int = 0

    def normals(self, rollouts, step: int, ncoords: int) -> np.ndarray:
        """Standard normals of shape (len(rollouts), ncoords)."""
        r = np.asarray(rollouts, dtype=np.uint64)[:, None]
        c = np.arange(ncoords, dtype=np.uint64)[None, :]
        return ndtri(uniforms(self.seed, self.stream, r, step, c))

    def uniforms(self, rollouts, step: int, ncoords: int) -> np.ndarray:
        r = np.asarray(rollouts, dtype=np.uint64)[:, None]
        c = np.arange(ncoords, dtype=np.uint64)[None, :]
        return uniforms(self.seed, self.stream, r, step, c)

    def child(self, stream: int) -> "CounterRNG":
        return CounterRNG(self.seed, int(hash_counter(self.seed, self.stream, stream, 0xFFFF, 0)))
