"""Reproducible random streams and per-epoch subset sampling.

Every random decision in a run comes from a xoshiro256++ generator whose
state is expanded with SplitMix64 from ``(master_seed, stream_id, epoch)``.
Streams for different purposes or epochs never share state, so a change in
how many draws one consumer makes cannot perturb another.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15

STREAM_IDS = ("sampling", "acceptance", "init", "data")


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & MASK64


def splitmix64(state: int) -> tuple[int, int]:
    """Advance a SplitMix64 state; return ``(new_state, output)``."""
    state = (state + GOLDEN_GAMMA) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, z ^ (z >> 31)


def hash64(text: str) -> int:
    """64-bit FNV-1a over the UTF-8 bytes of ``text``."""
    h = 0xCBF29CE484222325
    for byte in text.encode("utf-8"):
        h ^= byte
        h = (h * 0x100000001B3) & MASK64
    return h


class Xoshiro256pp:
    """xoshiro256++ 1.0 (Blackman & Vigna)."""

    __slots__ = ("s0", "s1", "s2", "s3")

    def __init__(self, state: Sequence[int]):
        if len(state) != 4:
            raise ValueError("xoshiro256++ needs four 64-bit words")
        if not any(state):
            raise ValueError("xoshiro256++ state must not be all zero")
        self.s0, self.s1, self.s2, self.s3 = (int(w) & MASK64 for w in state)

    @classmethod
    def from_seed(cls, seed: int) -> "Xoshiro256pp":
        sm = seed & MASK64
        words = []
        for _ in range(4):
            sm, out = splitmix64(sm)
            words.append(out)
        return cls(words)

    @property
    def state(self) -> tuple[int, int, int, int]:
        return (self.s0, self.s1, self.s2, self.s3)

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self.s0, self.s1, self.s2, self.s3
        result = (_rotl((s0 + s3) & MASK64, 23) + s0) & MASK64
        t = (s1 << 17) & MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self.s0, self.s1, self.s2, self.s3 = s0, s1, s2, s3
        return result

    def random(self) -> float:
        """Uniform double in [0, 1) from the top 53 bits."""
        return (self.next_u64() >> 11) * (1.0 / 9007199254740992.0)

    def randbelow(self, n: int) -> int:
        """Unbiased integer in [0, n) (Lemire's multiply-shift with rejection)."""
        if n <= 0:
            raise ValueError("randbelow needs n >= 1")
        m = self.next_u64() * n
        low = m & MASK64
        if low < n:
            threshold = ((1 << 64) - n) % n
            while low < threshold:
                m = self.next_u64() * n
                low = m & MASK64
        return m >> 64

    def normal(self) -> float:
        """Standard normal via Box-Muller; consumes two draws per call."""
        u1 = 1.0 - self.random()  # (0, 1]
        u2 = self.random()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def uniform_array(self, size: int, low: float = 0.0, high: float = 1.0) -> np.ndarray:
        draws = np.fromiter((self.random() for _ in range(size)), dtype=np.float64, count=size)
        return low + (high - low) * draws

    def normal_array(self, size: int) -> np.ndarray:
        return np.fromiter((self.normal() for _ in range(size)), dtype=np.float64, count=size)

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randbelow(i + 1)
            items[i], items[j] = items[j], items[i]


@dataclass(frozen=True)
class RngStream:
    master_seed: int
    stream_id: str
    epoch: int

    def generator(self) -> Xoshiro256pp:
        seed = (self.master_seed ^ hash64(self.stream_id) ^ (self.epoch * GOLDEN_GAMMA)) & MASK64
        return Xoshiro256pp.from_seed(seed)


def derive_stream(master_seed: int, stream_id: str, epoch: int = 0) -> Xoshiro256pp:
    """Fresh generator for one (purpose, epoch) pair of an experiment."""
    if stream_id not in STREAM_IDS:
        raise ValueError(f"unknown stream id {stream_id!r}; expected one of {STREAM_IDS}")
    return RngStream(int(master_seed) & MASK64, stream_id, int(epoch)).generator()


@dataclass(frozen=True)
class SubsetIndex:
    indices: np.ndarray
    n_total: int

    def __post_init__(self):
        idx = self.indices
        if idx.ndim != 1 or len(idx) < 1:
            raise ValueError("subset must hold at least one index")
        if idx[0] < 0 or idx[-1] >= self.n_total:
            raise ValueError("subset index out of range")
        if np.any(np.diff(idx) <= 0):
            raise ValueError("subset indices must be sorted and distinct")

    def __len__(self) -> int:
        return len(self.indices)

    @classmethod
    def full(cls, n_total: int) -> "SubsetIndex":
        return cls(np.arange(n_total, dtype=np.int64), n_total)


def sample_subset(n_total: int, k: int, rng: Xoshiro256pp) -> SubsetIndex:
    """Draw ``k`` distinct indices from ``range(n_total)`` by partial Fisher-Yates.

    The swaps are tracked sparsely, so cost is O(k) regardless of ``n_total``;
    the result equals the textbook array version step for step.
    """
    if not 1 <= k <= n_total:
        raise ValueError(f"subset size {k} outside [1, {n_total}]")
    if k == n_total:
        return SubsetIndex.full(n_total)
    swapped: dict[int, int] = {}
    picked = []
    for i in range(k):
        j = i + rng.randbelow(n_total - i)
        vj = swapped.get(j, j)
        swapped[j] = swapped.get(i, i)
        picked.append(vj)
    picked.sort()
    return SubsetIndex(np.asarray(picked, dtype=np.int64), n_total)
