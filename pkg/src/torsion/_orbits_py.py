"""Vectorized numpy fallback for the orbit walk (same output as the compiled kernel)."""
import numpy as np

CHUNK = 1 << 20


def primitive_representatives(d1, d2, t11, t12, t21, t22, period):
    """Smallest linear index ``k1 * d2 + k2`` of every orbit of exact length ``period``.

    A start point is kept when no iterate ``T^j``, ``0 < j < period``, returns to
    it and none has a smaller index.  Work is done in chunks to bound memory.
    """
    d1, d2, period = int(d1), int(d2), int(period)
    total = d1 * d2
    reps = []
    for lo in range(0, total, CHUNK):
        start = np.arange(lo, min(total, lo + CHUNK), dtype=np.int64)
        k1 = start // d2
        k2 = start - k1 * d2
        keep = np.ones(start.shape, dtype=bool)
        for _ in range(period - 1):
            k1, k2 = (t11 * k1 + t12 * k2) % d1, (t21 * k1 + t22 * k2) % d2
            idx = k1 * d2 + k2
            keep &= idx > start
        reps.append(start[keep])
    return np.concatenate(reps) if reps else np.zeros(0, dtype=np.int64)
