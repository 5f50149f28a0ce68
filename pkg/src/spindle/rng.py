"""Reproducible random streams.

Each replication owns one stream. A stream is the pair ``(seed, stream)``
used as the 128-bit key of a Philox-4x64 counter-based generator, so the
variates depend on nothing but the key: not on call order, worker count or
platform.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """SplitMix64 finaliser (Steele, Lea, Flood 2014); a bijection on 64 bits."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def replication_stream(n: int, rep: int) -> int:
    """Stream index for replication ``rep`` of sample size ``n``.

    ``(n << 32) | rep`` is injective for n, rep < 2**32 and splitmix64 is a
    bijection, so distinct (n, rep) never share a stream.
    """
    if not (0 <= n < 1 << 32 and 0 <= rep < 1 << 32):
        raise ValueError("n and rep must fit in 32 bits")
    return splitmix64((n << 32) | rep)


@dataclass(frozen=True)
class Rng:
    seed: int
    stream: int = 0

    def __post_init__(self):
        for name in ("seed", "stream"):
            value = getattr(self, name)
            if not 0 <= value <= MASK64:
                raise ValueError(f"{name} must be an unsigned 64-bit integer, got {value}")

    def generator(self) -> np.random.Generator:
        """A fresh generator positioned at the start of this stream."""
        return np.random.Generator(np.random.Philox(key=self.seed | (self.stream << 64)))

    def with_stream(self, stream: int) -> "Rng":
        return Rng(self.seed, stream)
