"""Seed-derived random streams.

One master seed fans out into independent PCG64 streams, one per consumer
(weight init, batch shuffling, dropout masks, fold assignment, random
embeddings). Streams are keyed by fixed integers so that enabling or
disabling one consumer never perturbs the draws seen by another.
"""

from __future__ import annotations

import numpy as np

INIT = 0
SHUFFLE = 1
DROPOUT = 2
FOLDS = 3
EMBED = 4
MOMENTS = 5


def stream(seed: int, *key: int) -> np.random.Generator:
    """Return the generator for `key` under `seed`. Same arguments, same stream."""
    ss = np.random.SeedSequence(seed, spawn_key=tuple(key))
    return np.random.Generator(np.random.PCG64(ss))
