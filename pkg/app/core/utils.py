import math

import numpy as np


def round_half_up(value: float) -> int:
    """Closest integer to value; exact halves go up (14.5 -> 15, 6.5 -> 7)."""
    return int(math.floor(value + 0.5))


def derive_seed(base_seed: int, *path: int) -> int:
    """
    Derive an independent 63-bit seed from base_seed and an integer path.

    Splitting rule: numpy SeedSequence(base_seed, spawn_key=path), first two
    32-bit words of its state, top bit cleared. Iteration i of optimizer run r
    uses path (r, i); replication j at buffer size k uses path (k, j).
    """
    seq = np.random.SeedSequence(base_seed, spawn_key=tuple(int(p) for p in path))
    lo, hi = seq.generate_state(2, dtype=np.uint32)
    return ((int(hi) << 32) | int(lo)) & 0x7FFF_FFFF_FFFF_FFFF


def mean_and_stderr(values: list[float]) -> tuple[float, float]:
    """Sample mean and standard error (ddof=1); stderr is 0.0 for a single sample."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise ValueError("mean_and_stderr needs at least one sample")
    mean = float(arr.mean())
    if arr.size == 1:
        return mean, 0.0
    return mean, float(arr.std(ddof=1) / math.sqrt(arr.size))
