"""Counter-based random substreams.

Every random quantity in the package is drawn from a :class:`Stream`, a
(seed, key path) pair that maps to an independent Philox generator.  The
value of a draw therefore depends only on the seed and the key path, never on
the order in which workers run.
"""
from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np

_MAX_SEED = 2**64


def _as_key(part) -> int:
    if isinstance(part, (bool, np.bool_)):
        return int(part)
    if isinstance(part, (int, np.integer)):
        part = int(part)
        # zigzag so negative block ids map to distinct non-negative keys
        return 2 * part if part >= 0 else -2 * part - 1
    if isinstance(part, str):
        return zlib.crc32(part.encode()) + (1 << 33)
    raise TypeError(f"stream key parts must be int or str, got {type(part).__name__}")


@dataclass(frozen=True)
class Stream:
    seed: int
    key: tuple = ()

    def __post_init__(self):
        if not 0 <= int(self.seed) < _MAX_SEED:
            raise ValueError("seed must be an unsigned 64-bit integer")

    def child(self, *parts) -> "Stream":
        return Stream(self.seed, self.key + tuple(_as_key(p) for p in parts))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed), spawn_key=self.key)
        return np.random.Generator(np.random.Philox(ss))


def as_stream(stream) -> Stream:
    """Accept a :class:`Stream`, an integer seed or ``None`` (seed 0)."""
    if isinstance(stream, Stream):
        return stream
    if stream is None:
        return Stream(0)
    return Stream(int(stream))
