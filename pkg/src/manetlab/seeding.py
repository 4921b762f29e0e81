"""Deterministic seed derivation."""

import numpy as np


def derive(seed: int, *keys: int) -> int:
    """64-bit child seed of ``seed`` for the integer path ``keys``."""
    state = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, *keys]).generate_state(2, dtype=np.uint32)
    return (int(state[0]) << 32) | int(state[1])
