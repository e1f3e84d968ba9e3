"""Seed derivation for reproducible, schedule-independent Monte-Carlo runs.

Every random stream is addressed by ``(master_seed, *keys)``.  The keys are
fed to :class:`numpy.random.SeedSequence` as its ``spawn_key``, so trial ``i``
of experiment stream ``s`` always draws from the same generator no matter
which worker or in which order it runs.
"""

from __future__ import annotations

import numpy as np

# Stream identifiers so different consumers never share a generator.
STREAM_WALK = 1
STREAM_WALL = 2
STREAM_FIELD = 3
STREAM_DETECT = 4
STREAM_CODEC = 5


def make_rng(seed: int, *keys: int) -> np.random.Generator:
    """PCG64 generator for ``seed`` split along ``keys``."""
    if seed < 0:
        raise ValueError(f"seed must be nonnegative, got {seed}")
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.PCG64(ss))


def block_ranges(n: int, block: int):
    """Yield ``(index, start, stop)`` for fixed-size blocks covering ``range(n)``.

    Block boundaries depend only on ``n`` and ``block``; combined with
    :func:`make_rng` keyed on the block index this makes chunked simulations
    reproducible independently of how blocks are scheduled.
    """
    if block <= 0:
        raise ValueError("block must be positive")
    for b, start in enumerate(range(0, n, block)):
        yield b, start, min(n, start + block)
