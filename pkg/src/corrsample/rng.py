"""Counter-based 64-bit mixing used for all shared randomness.

Every random quantity is a pure function of ``(seed, counter)``, so trials can
be evaluated in any order or chunking and still produce the same bits.
"""
from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_C1 = 0xBF58476D1CE4E5B9
_C2 = 0x94D049BB133111EB


def mix64(x: int) -> int:
    """splitmix64 finalizer on a Python int."""
    z = (x + _GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * _C1) & MASK64
    z = ((z ^ (z >> 27)) * _C2) & MASK64
    return z ^ (z >> 31)


def mix64_array(x: np.ndarray) -> np.ndarray:
    """Vectorized :func:`mix64`; ``x`` must be uint64. Returns a new array."""
    z = x + np.uint64(_GOLDEN)
    z ^= z >> np.uint64(30)
    z *= np.uint64(_C1)
    z ^= z >> np.uint64(27)
    z *= np.uint64(_C2)
    z ^= z >> np.uint64(31)
    return z


def derive_seed(master: int, index: int) -> int:
    """Seed for sub-stream ``index`` of ``master``."""
    return mix64((master & MASK64) ^ mix64(index & MASK64))


def derive_seeds(master: int, start: int, stop: int) -> np.ndarray:
    """Vectorized :func:`derive_seed` over ``index in range(start, stop)``."""
    idx = np.arange(start, stop, dtype=np.uint64)
    return mix64_array(np.uint64(master & MASK64) ^ mix64_array(idx))


def key_hashes(keys) -> np.ndarray:
    """Pre-mixed element keys, ready to be combined with a seed."""
    return mix64_array(np.asarray(keys, dtype=np.uint64))


def priorities(seeds: np.ndarray, hashed_keys: np.ndarray) -> np.ndarray:
    """Matrix of priorities, shape ``(len(seeds), len(hashed_keys))``.

    Entry ``[t, j]`` equals ``mix64(seeds[t] ^ hashed_keys[j])``, matching
    :func:`priority` bit for bit.
    """
    return mix64_array(seeds[:, None] ^ hashed_keys[None, :])


def priority(seed: int, key: int) -> int:
    return mix64((seed & MASK64) ^ mix64(key & MASK64))


def to_unit(bits: np.ndarray) -> np.ndarray:
    """Top 53 bits as a double in [0, 1)."""
    return (bits >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


def to_range(bits: np.ndarray, n: int) -> np.ndarray:
    """Map 64-bit values onto ``0..n-1`` by multiply-shift on the top 32 bits."""
    hi = bits >> np.uint64(32)
    return ((hi * np.uint64(n)) >> np.uint64(32)).astype(np.int64)


def _argmin_numpy(seeds: np.ndarray, hashed_keys: np.ndarray) -> np.ndarray:
    return priorities(seeds, hashed_keys).argmin(axis=1)


try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

if numba is not None:

    @numba.njit(cache=True)
    def _argmin_jit(seeds, hashed_keys):
        out = np.empty(seeds.shape[0], np.int64)
        golden, c1, c2 = np.uint64(_GOLDEN), np.uint64(_C1), np.uint64(_C2)
        s30, s27, s31 = np.uint64(30), np.uint64(27), np.uint64(31)
        for t in range(seeds.shape[0]):
            s = seeds[t]
            best = np.uint64(0)
            best_j = 0
            for j in range(hashed_keys.shape[0]):
                z = (s ^ hashed_keys[j]) + golden
                z = (z ^ (z >> s30)) * c1
                z = (z ^ (z >> s27)) * c2
                z = z ^ (z >> s31)
                if j == 0 or z < best:
                    best = z
                    best_j = j
            out[t] = best_j
        return out


def argmin_priority(seeds: np.ndarray, hashed_keys: np.ndarray) -> np.ndarray:
    """Column of the minimal priority in each row; ties go to the lower column."""
    if numba is not None:
        return _argmin_jit(np.ascontiguousarray(seeds), np.ascontiguousarray(hashed_keys))
    return _argmin_numpy(seeds, hashed_keys)
