"""Deterministic, portable random streams.

Randomness comes from the Philox counter-based generator. Each stream is keyed
by SeedSequence(master seed, spawn_key=(purpose, a, b)), so every (purpose,
cycle, technology) tuple gets an independent stream: enabling another
technology or adding draws to one stream never perturbs the others, and no
entropy is ever pulled from the OS.
"""
from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1

# stream purposes (first spawn-key word)
CAMPAIGN_TX = 1
CAMPAIGN_SPEED = 2
WORKLOAD = 3
SCHEDULE_TEST = 7


def substream(seed: int, purpose: int, a: int = 0, b: int = 0) -> np.random.Generator:
    """Independent generator for one (purpose, a, b) path under a master seed."""
    ss = np.random.SeedSequence(entropy=seed & _MASK64, spawn_key=(purpose, a, b))
    return np.random.Generator(np.random.Philox(ss))
