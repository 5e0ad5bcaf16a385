"""Seeding conventions.

Every sampler draws from numpy's PCG64 bit generator.  Integer seeds go
through ``SeedSequence`` so that child streams (per experiment cell, per
sampling/stripping stage) are derived by spawn keys and never depend on the
order in which work is scheduled.
"""
from __future__ import annotations

import numpy as np




def make_rng(seed=None) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def child_sequence(seed: int, *key: int) -> np.random.SeedSequence:
    """Independent stream addressed by ``key`` (e.g. ``(n, trial_index)``)."""
    return np.random.SeedSequence(seed, spawn_key=tuple(int(x) for x in key))
