"""Shared randomness both players derive from a common 128-bit seed.

Derivation (fixed, so independent implementations interoperate)::

    GAMMA  = 0x9E3779B97F4A7C15
    mix64  = SplitMix64 finalizer (shifts 30/27/31, multipliers
             0xBF58476D1CE4E5B9 / 0x94D049BB133111EB), all mod 2**64
    k0, k1 = high and low 64-bit halves of the seed
    base(tag, stream) = mix64(mix64(mix64(k0 ^ tag) + k1) + stream * GAMMA)
    word(base, n)     = mix64(base + n * GAMMA)

    tape element i >= 1:  x = (word(bt, 2i) * |U|) >> 64
                          p = (word(bt, 2i + 1) >> 11) * 2**-53
    hash bit h_j(x):      word(bh, (x << 32) + j) >> 63
    trial seed t:         word(br, 2t) << 64 | word(br, 2t + 1)

with ``bt = base(TAG_TAPE, stream)``, ``bh = base(TAG_HASH, stream)`` and
``br = base(TAG_TRIAL, 0)``. ``stream`` separates the independent sampler
runs of a multi-round protocol (one stream per tree depth).
"""

from __future__ import annotations

import secrets
from dataclasses import dataclass
from typing import NamedTuple

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB

TAG_TAPE = 0x7461706500000000
TAG_HASH = 0x6861736800000000
TAG_TRIAL = 0x747269616C000000
TAG_PUBLIC = 0x7075626C00000000
TAG_INPUT = 0x696E707400000000

_INV53 = 1.0 / (1 << 53)


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def word(base: int, n: int) -> int:
    return mix64(base + n * GAMMA)


@dataclass(frozen=True)
class SharedSeed:
    value: int

    def __post_init__(self):
        if not 0 <= self.value < (1 << 128):
            raise ValueError("seed must be a 128-bit value")

    @classmethod
    def from_hex(cls, text: str) -> "SharedSeed":
        text = text.strip().lower()
        if text.startswith("0x"):
            text = text[2:]
        if len(text) != 32:
            raise ValueError("seed must be 32 hex characters")
        return cls(int(text, 16))

    @classmethod
    def random(cls) -> "SharedSeed":
        return cls(secrets.randbits(128))

    @property
    def hex(self) -> str:
        return f"{self.value:032x}"

    @property
    def words(self) -> tuple[int, int]:
        return self.value >> 64, self.value & MASK64

    def base(self, tag: int, stream: int = 0) -> int:
        k0, k1 = self.words
        return mix64(mix64(mix64(k0 ^ tag) + k1) + stream * GAMMA)

    def trial(self, t: int) -> "SharedSeed":
        """Sub-seed for Monte-Carlo trial ``t``."""
        br = self.base(TAG_TRIAL)
        return SharedSeed((word(br, 2 * t) << 64) | word(br, 2 * t + 1))

    def uniform(self, tag: int, index: int = 0) -> float:
        """A public uniform in [0,1) from a tagged domain (not the tape)."""
        return (word(self.base(tag), index) >> 11) * _INV53


class TapeElement(NamedTuple):
    x: int
    p: float


def _size(universe) -> int:
    return universe if isinstance(universe, int) else len(universe)


def element_at(seed: SharedSeed, universe, i: int, stream: int = 0) -> TapeElement:
    """The ``i``-th (1-based) element (x, p) of the shared tape."""
    if i < 1:
        raise ValueError("tape indices start at 1")
    bt = seed.base(TAG_TAPE, stream)
    x = (word(bt, 2 * i) * _size(universe)) >> 64
    p = (word(bt, 2 * i + 1) >> 11) * _INV53
    return TapeElement(x, p)


def hash_bit(seed: SharedSeed, j: int, x: int, stream: int = 0) -> int:
    """Bit ``h_j(x)`` of the shared hash family (j >= 1)."""
    if j < 1:
        raise ValueError("hash indices start at 1")
    return word(seed.base(TAG_HASH, stream), (x << 32) + j) >> 63


def sample_index(u: float, probs) -> int:
    """Inverse-CDF draw from ``probs`` using uniform ``u``."""
    acc = 0.0
    last = 0
    for idx, p in enumerate(probs):
        if p <= 0:
            continue
        acc += p
        last = idx
        if u < acc:
            return idx
    return last
