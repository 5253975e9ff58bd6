"""Seeded random streams.

Every random draw in the package goes through ``numpy.random.Generator`` on
the counter-based ``Philox`` bit generator (Philox-4x64, 10 rounds), keyed by
``numpy.random.SeedSequence(seed, spawn_key)``. Replicate ``r`` of a run with
base seed ``s`` uses seed ``s + r``.
"""

import numpy as np


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Generator for ``seed``; extra integers select an independent sub-stream."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.Philox(ss))
