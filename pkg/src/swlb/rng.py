"""Deterministic random streams for parallel resampling.

Every source of randomness in this package is a Philox counter-based
generator seeded through a :class:`numpy.random.SeedSequence` keyed by a
master seed plus an integer path (replicate index, replication index,
stage, ...).  Streams depend only on their key, never on execution order,
so results are identical for any worker count or scheduling.
"""

from __future__ import annotations

import numpy as np


def substream(master_seed: int, *path: int) -> np.random.Generator:
    """Return the generator addressed by ``path`` under ``master_seed``.

    The same ``(master_seed, *path)`` always yields a bit-identical
    stream; distinct paths yield statistically independent streams.
    """
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(master_seed: int, *path: int) -> int:
    """Derive a 64-bit master seed for a nested engine keyed by ``path``."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1, dtype=np.uint64)[0])
