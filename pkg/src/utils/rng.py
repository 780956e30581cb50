"""
Seeded random number generation

All randomized pathways draw from numpy's PCG64 bit generator, seeded
through SeedSequence so runs reproduce across platforms.
"""

from typing import List

import numpy as np

from src.utils.errors import ParameterError


def _check_seed(seed: int) -> int:
    if int(seed) < 0 or int(seed) >= 2 ** 64:
        raise ParameterError(f"Seed must be an unsigned 64-bit integer, got {seed}")
    return int(seed)


def get_rng(seed: int) -> np.random.Generator:
    """Get a PCG64-backed generator for the given seed"""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(_check_seed(seed))))


def spawn_rngs(seed: int, count: int) -> List[np.random.Generator]:
    """Independent child generators derived from one seed"""
    children = np.random.SeedSequence(_check_seed(seed)).spawn(count)
    return [np.random.Generator(np.random.PCG64(child)) for child in children]
