"""Deterministic RNG substream derivation.

Every stochastic stage derives its generators from the single master seed
through one fixed splitting rule so that full studies are reproducible from
one number and independent of scheduling order:

    substream key = (stage tag, *indices)
    generator    = PCG64 seeded with SeedSequence(master_seed, spawn_key=key)

Stage tags: 0 = experiment sampling (j, i), 1 = training split (i),
2 = bootstrap resampling (resample index, then j, i inside the resample).
"""

from __future__ import annotations

import numpy as np

STAGE_SIMULATE = 0
STAGE_TRAIN_SPLIT = 1
STAGE_BOOTSTRAP = 2


def substream(master_seed: int, *key: int) -> np.random.Generator:
    """Independent generator for the given (stage, indices...) key."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))
