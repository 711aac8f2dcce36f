"""Seeded random streams keyed by draw site.

Each stream is derived from ``(seed, key...)`` through a
:class:`numpy.random.SeedSequence` spawn key, so adding a new draw site never
shifts the numbers produced at existing ones.
"""

import zlib

import numpy as np


def _key(part) -> int:
    if isinstance(part, (int, np.integer)):
        return int(part)
    return zlib.crc32(str(part).encode("utf-8"))


def derive_rng(seed: int, *keys) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(_key(k) for k in keys))
    return np.random.Generator(np.random.PCG64(ss))
