"""Buffered uniform streams over counter-based numpy bit generators."""
from __future__ import annotations

import numpy as np

_FIRST_BLOCK = 32
_MAX_BLOCK = 8192


class UniformStream:
    """Sequential source of U[0, 1) doubles.

    Draws are pulled from the wrapped generator in blocks; because numpy fills
    arrays in stream order, the values seen through :meth:`uniform` are the
    same as calling ``generator.random()`` once per draw.
    """

    __slots__ = ("_gen", "_buf", "_pos", "_block", "drawn")

    def __init__(self, generator: np.random.Generator):
        self._gen = generator
        self._buf: list[float] = []
        self._pos = 0
        self._block = _FIRST_BLOCK
        self.drawn = 0

    @classmethod
    def from_seed(cls, seed: int) -> "UniformStream":
        return cls(np.random.Generator(np.random.Philox(key=int(seed))))

    def uniform(self) -> float:
        if self._pos == len(self._buf):
            # short trials stay cheap, long ones amortize the numpy call
            self._buf = self._gen.random(self._block).tolist()
            self._block = min(2 * self._block, _MAX_BLOCK)
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        self.drawn += 1
        return u


def as_stream(rng) -> UniformStream:
    """Accept a UniformStream, a numpy Generator or an integer seed."""
    if isinstance(rng, UniformStream):
        return rng
    if isinstance(rng, np.random.Generator):
        return UniformStream(rng)
    if isinstance(rng, (int, np.integer)):
        return UniformStream.from_seed(int(rng))
    raise TypeError(f"cannot use {type(rng).__name__} as a random stream")
