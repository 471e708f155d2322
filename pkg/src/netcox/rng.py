"""Reproducible random streams keyed by ``(seed, replicate, entity)``."""
from __future__ import annotations

import numpy as np


def stream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for ``seed`` and an integer key path.

    Streams with different keys are statistically independent, and the
    same ``(seed, key)`` always yields the same draws regardless of the
    order in which streams are created.
    """
    if seed is None:
        raise ValueError("an explicit seed is required")
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key)))


def as_generator(rng) -> np.random.Generator:
    """Accept a Generator or an integer seed."""
    if isinstance(rng, np.random.Generator):
        return rng
    return stream(rng)
