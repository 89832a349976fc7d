"""Counter-based random streams.

Every walker, site count and replica draws from its own SplitMix64 stream
whose starting state is a hash of ``(seed, replica, site, index)``.  Draw
``t`` of the stream with key ``k`` is ``fmix64(k + (t + 1) * GAMMA)``, so any
draw can be produced without replaying the ones before it and results do
not depend on scheduling.  The compiled kernels implement the same
functions bit for bit.
"""

from __future__ import annotations

import numpy as np

MASK = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
_C1 = 0xBF58476D1CE4E5B9
_C2 = 0x94D049BB133111EB

# reserved particle indices
ROOT_WALKER = 1 << 63
COUNT_STREAM = 1 << 62
THIN_STREAM = (1 << 62) + 1


def fmix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * _C1) & MASK
    z = ((z ^ (z >> 27)) * _C2) & MASK
    return z ^ (z >> 31)


def _absorb(h: int, x: int) -> int:
    return fmix64(((h ^ (x & MASK)) + GAMMA) & MASK)


def derive_key(seed: int, replica: int, site: int, index: int) -> int:
    h = fmix64(((seed & MASK) + GAMMA) & MASK)
    h = _absorb(h, replica)
    h = _absorb(h, site)
    return _absorb(h, index)


def draw(key: int, t: int) -> int:
    return fmix64((key + (t + 1) * GAMMA) & MASK)


def to_unit(x: int) -> float:
    return (x >> 11) * (1.0 / (1 << 53))


class CounterStream:
    """Sequential view of one counter-based stream.

    Implements ``random()`` so it can be passed anywhere a
    ``numpy.random.Generator`` is accepted for uniform draws.
    """

    __slots__ = ("key", "counter")

    def __init__(self, key: int, counter: int = 0):
        self.key = key & MASK
        self.counter = counter

    @classmethod
    def for_site(cls, seed: int, replica: int, site: int, index: int = COUNT_STREAM):
        return cls(derive_key(seed, replica, site, index))

    def next_u64(self) -> int:
        x = draw(self.key, self.counter)
        self.counter += 1
        return x

    def random(self) -> float:
        return to_unit(self.next_u64())

    def below(self, n: int) -> int:
        return self.next_u64() % n


# vectorized forms, used by the synchronous frog engine

_C1_NP = np.uint64(_C1)
_C2_NP = np.uint64(_C2)
_GAMMA_NP = np.uint64(GAMMA)


def fmix64_array(z: np.ndarray) -> np.ndarray:
    z = z.astype(np.uint64, copy=True)
    z ^= z >> np.uint64(30)
    z *= _C1_NP
    z ^= z >> np.uint64(27)
    z *= _C2_NP
    z ^= z >> np.uint64(31)
    return z


def draw_array(keys: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Draw ``t[i]`` of stream ``keys[i]`` for every i."""
    state = keys.astype(np.uint64) + (t.astype(np.uint64) + np.uint64(1)) * _GAMMA_NP
    return fmix64_array(state)
