"""Deterministic random streams keyed by ``(seed, group, block)``."""

from __future__ import annotations

import numpy as np


def stream_seed(seed: int, group: int, block: int) -> np.random.SeedSequence:
    """Seed sequence for one block of work; distinct keys give independent streams."""
    if seed < 0 or group < 0 or block < 0:
        raise ValueError("seed, group and block must be nonnegative")
    return np.random.SeedSequence(int(seed), spawn_key=(int(group), int(block)))


def stream_rng(seed: int, group: int, block: int) -> np.random.Generator:
    return np.random.default_rng(stream_seed(seed, group, block))
