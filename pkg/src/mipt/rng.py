"""Seed-stream splitting.

Every trajectory gets its own 64-bit seed derived from the master seed and an
integer key path (point index, trajectory index, purpose). Derivation goes
through :class:`numpy.random.SeedSequence` with ``spawn_key`` set to the path,
so a stream depends only on ``(master, key)`` and never on how work is split
between processes. Generators are PCG64 via :func:`numpy.random.default_rng`.
"""

import numpy as np


def derive_seed(master: int, *key: int) -> int:
    """Deterministic 64-bit seed for the stream at ``key`` under ``master``."""
    seq = np.random.SeedSequence(int(master), spawn_key=tuple(int(k) for k in key))
    lo, hi = seq.generate_state(2, np.uint32)
    return int(lo) | (int(hi) << 32)


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
