"""
Seeded random streams.

Substreams are derived from (master seed, keys...) through numpy's
SeedSequence hashing, so an instance's draws never depend on worker layout.
"""
from typing import Optional

import numpy as np


def derive_seed(master_seed: int, *keys: int) -> int:
    """
    Derive a 64-bit seed for a substream.

    Args:
        master_seed: Non-negative master seed
        *keys: Non-negative integers identifying the substream

    Returns:
        int: Seed usable with numpy.random.default_rng
    """
    sequence = np.random.SeedSequence([int(master_seed), *[int(k) for k in keys]])
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def make_rng(seed: Optional[int]) -> np.random.Generator:
    """PCG64 generator for the given seed."""
    return np.random.default_rng(seed)
