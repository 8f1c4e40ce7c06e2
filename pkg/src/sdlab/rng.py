"""Reproducible random streams backed by the counter-based Philox generator.

A stream is addressed by a (master_seed, stream_id) pair.  Deriving a new
stream is O(1) because the pair is simply the 128-bit Philox key, so any
number of statistically independent streams can be split off a single master
seed without touching generator state.  The same pair yields the same draw
sequence on every run and platform.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

_UINT64_MAX = 2**64 - 1


@dataclass(frozen=True)
class RngStream:
    """Address of one reproducible random stream."""

    master_seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("master_seed", "stream_id"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or not 0 <= value <= _UINT64_MAX:
                raise ParameterError(f"{name} must be an unsigned 64-bit integer, got {value!r}")

    def generator(self) -> np.random.Generator:
        """A fresh numpy Generator positioned at the start of this stream."""
        key = np.array([self.master_seed, self.stream_id], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))

    def substream(self, offset: int) -> "RngStream":
        """The stream addressed by ``stream_id + offset`` under the same master seed."""
        return RngStream(self.master_seed, self.stream_id + int(offset))


def as_generator(seed, stream_id: int = 0) -> np.random.Generator:
    """Coerce an int master seed, an RngStream, or a Generator into a Generator.

    An int is interpreted as ``RngStream(seed, stream_id)``; a Generator is
    passed through (the caller owns its state).
    """
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, RngStream):
        return seed.generator()
    if isinstance(seed, (int, np.integer)):
        return RngStream(int(seed), stream_id).generator()
    raise ParameterError(f"cannot build a generator from {seed!r}")
