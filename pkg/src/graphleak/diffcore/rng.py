"""Deterministic, counter-based random streams.

Every randomised routine in the package takes an explicit ``RngStream``.
Philox is counter-based, so independent streams can be derived from
(seed, index) pairs without sequencing, and the draw sequence for a given
key is identical on every platform.
"""

from __future__ import annotations

import numpy as np

__all__ = ["RngStream"]


class RngStream:
    """A seeded random stream backed by a Philox counter generator."""

    def __init__(self, seed: int, stream: int = 0):
        self.seed = int(seed)
        self.stream = int(stream)
        self._gen = np.random.Generator(
            np.random.Philox(key=np.array([self.seed, self.stream], dtype=np.uint64))
        )

    def derive(self, index: int) -> "RngStream":
        """Independent child stream; (seed, index) fully determines its draws."""
        # Offset keeps derive(0) distinct from the parent stream itself.
        return RngStream(self.seed, self.stream * 1_000_003 + int(index) + 1)

    @property
    def gen(self) -> np.random.Generator:
        return self._gen

    # Thin pass-throughs so call sites read naturally.
    def uniform(self, low=0.0, high=1.0, size=None):
        return self._gen.uniform(low, high, size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self._gen.normal(loc, scale, size)

    def integers(self, low, high=None, size=None):
        return self._gen.integers(low, high, size=size)

    def permutation(self, n):
        return self._gen.permutation(n)

    def choice(self, a, size=None, replace=True, p=None):
        return self._gen.choice(a, size=size, replace=replace, p=p)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream={self.stream})"
