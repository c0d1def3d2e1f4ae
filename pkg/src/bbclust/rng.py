"""Seeded random streams with stable, schedule-independent derivation.

A :class:`SeededRng` is a master seed plus a derivation path.  Each path
element is mapped to a 32-bit word and the words become the ``spawn_key``
of a :class:`numpy.random.SeedSequence`, so

* the same ``(master_seed, path)`` always yields the same stream, and
* streams with different paths are statistically independent.

Path element mapping: non-negative ints are used as-is (must fit in 32 bits),
strings are hashed with CRC-32 of their UTF-8 bytes, floats with CRC-32 of
``repr(value)``.
"""

from __future__ import annotations

import secrets
import zlib
from dataclasses import dataclass

import numpy as np

_MASK32 = 0xFFFFFFFF


def _path_word(part: int | str | float) -> int:
    if isinstance(part, bool):
        return int(part)
    if isinstance(part, (int, np.integer)):
        part = int(part)
        if part < 0 or part > _MASK32:
            raise ValueError(f"integer path element out of 32-bit range: {part}")
        return part
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8")) & _MASK32
    if isinstance(part, (float, np.floating)):
        return zlib.crc32(repr(float(part)).encode("ascii")) & _MASK32
    raise TypeError(f"unsupported path element {part!r}")


@dataclass(frozen=True)
class SeededRng:
    """Immutable handle on one substream of a master seed."""

    master_seed: int
    path: tuple[int, ...] = ()

    def __post_init__(self):
        if not 0 <= int(self.master_seed) < 2**64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")

    def child(self, *parts: int | str | float) -> "SeededRng":
        """Derive a substream by appending ``parts`` to the path."""
        return SeededRng(self.master_seed, self.path + tuple(_path_word(p) for p in parts))

    def generator(self) -> np.random.Generator:
        """A fresh generator positioned at the start of this substream."""
        seq = np.random.SeedSequence(int(self.master_seed), spawn_key=self.path)
        return np.random.Generator(np.random.PCG64(seq))


def as_rng(seed: "SeededRng | int | None") -> SeededRng:
    """Coerce an int (or None, meaning a fresh random seed) to a SeededRng."""
    if isinstance(seed, SeededRng):
        return seed
    if seed is None:
        seed = fresh_seed()
    return SeededRng(int(seed))


def fresh_seed() -> int:
    return secrets.randbits(63)
