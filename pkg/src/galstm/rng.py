"""Splittable, counter-based pseudo-random generator (SplitMix64).

The platform RNGs (random, numpy.random) are deliberately not used for
anything that affects results: this generator is a handful of integer
ops, so streams are bit-reproducible on every platform, and child
streams are derived by hashing rather than by sharing state, which makes
forking cheap and order-independent.

The k-th raw draw from seed s is ``mix64(s + k*GOLDEN)``, so bulk draws
vectorize over a counter range without changing the stream.
"""

from __future__ import annotations

import math

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def _mix64(z: int) -> int:
    z &= _MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return z ^ (z >> 31)


def derive_seed(*parts: int) -> int:
    """Hash integers into a 64-bit seed; used for child streams.

    derive_seed(master, generation, index) gives every GA individual its
    own stream, identical whether evaluation runs serially or in parallel.
    """
    acc = _mix64(len(parts) + _GOLDEN)
    for p in parts:
        acc = _mix64(acc ^ _mix64(p))
    return acc


class Rng:
    """Deterministic stream of doubles/ints from a 64-bit seed."""

    def __init__(self, seed: int):
        self.seed = seed & _MASK64
        self._counter = 0

    def child(self, stream_id: int) -> "Rng":
        """Independent stream; does not consume from this one."""
        return Rng(derive_seed(self.seed, stream_id))

    def _raw(self, n: int) -> np.ndarray:
        idx = np.arange(self._counter + 1, self._counter + n + 1, dtype=np.uint64)
        self._counter += n
        z = np.uint64(self.seed) + idx * np.uint64(_GOLDEN)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
        return z ^ (z >> np.uint64(31))

    def uniform(self, lo: float = 0.0, hi: float = 1.0) -> float:
        """One double in [lo, hi)."""
        return float(self.uniform_array(1, lo, hi)[0])

    def uniform_array(self, shape, lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
        n = int(np.prod(shape))
        u = (self._raw(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53
        return (lo + (hi - lo) * u).reshape(shape)

    def normal(self, mean: float = 0.0, std: float = 1.0) -> float:
        return float(self.normal_array(1, mean, std)[0])

    def normal_array(self, shape, mean: float = 0.0, std: float = 1.0) -> np.ndarray:
        # Box-Muller, cosine branch only: simple and stateless.
        n = int(np.prod(shape))
        raw = self._raw(2 * n)
        u1 = ((raw[:n] >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53  # (0, 1]
        u2 = (raw[n:] >> np.uint64(11)).astype(np.float64) * 2.0**-53  # [0, 1)
        z = np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * math.pi * u2)
        return (mean + std * z).reshape(shape)

    def index(self, n: int) -> int:
        """Uniform integer in [0, n); rejection sampling, no modulo bias."""
        if n < 1:
            raise ValueError(f"index() needs n >= 1, got {n}")
        bound = (1 << 64) - ((1 << 64) % n)
        while True:
            r = int(self._raw(1)[0])
            if r < bound:
                return r % n

    def sample_indices(self, n: int, k: int) -> list[int]:
        """k distinct indices from [0, n), partial Fisher-Yates."""
        if not 0 <= k <= n:
            raise ValueError(f"cannot sample {k} of {n}")
        pool = list(range(n))
        for i in range(k):
            j = i + self.index(n - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]
