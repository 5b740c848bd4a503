"""Seeding helpers shared by the games, the engines and the experiment runners.

Everything random in the package flows from a splitmix64 stream.  The
stream state is a one-element ``uint64`` array so it can be handed to
compiled kernels and advanced in place.
"""

import numpy as np
from numba import njit

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15

_GOLDEN = np.uint64(GOLDEN)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S32 = np.uint64(32)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0


def mix64(*values: int) -> int:
    """Fold integers into one 64-bit seed with the splitmix64 finalizer.

    ``mix64(base_seed, game_index)`` is the per-game seed derivation used by
    the match runner; it is order sensitive and stable across platforms.
    """
    h = 0
    for v in values:
        h = (h + GOLDEN + (int(v) & MASK64)) & MASK64
        z = h
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        h = z ^ (z >> 31)
    return h


def make_stream(*seed_parts: int) -> np.ndarray:
    """Return a fresh stream state seeded from ``mix64(*seed_parts)``."""
    return np.array([mix64(*seed_parts)], dtype=np.uint64)


@njit(cache=True)
def next_u64(stream):
    stream[0] += _GOLDEN
    z = stream[0]
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True)
def randbelow(stream, n):
    """Uniform integer in ``[0, n)`` by multiply-shift (n < 2**32)."""
    hi = next_u64(stream) >> _S32
    return np.int64((hi * np.uint64(n)) >> _S32)


@njit(cache=True)
def uniform(stream):
    return np.float64(next_u64(stream) >> _S11) * _INV53
