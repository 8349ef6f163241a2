# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled orbit walk on the finite group Z/d1 x Z/d2."""
import numpy as np
from libc.stdlib cimport calloc, free


def primitive_representatives(long long d1, long long d2, long long t11, long long t12,
                              long long t21, long long t22, long long period):
    """Smallest linear index ``k1 * d2 + k2`` of every orbit of exact length ``period``.

    The map is ``(k1, k2) -> (t11 k1 + t12 k2 mod d1, t21 k1 + t22 k2 mod d2)``;
    coefficients must already be reduced to ``[0, d1)`` and ``[0, d2)``.
    """
    cdef long long total = d1 * d2
    cdef long long cap = total // period + 1
    out = np.empty(cap, dtype=np.int64)
    cdef long long[:] buf = out
    cdef unsigned char* seen = <unsigned char*> calloc(total, 1)
    if seen == NULL:
        raise MemoryError()
    cdef long long i, k1, k2, n1, idx, length, count = 0
    with nogil:
        for i in range(total):
            if seen[i]:
                continue
            k1 = i // d2
            k2 = i - k1 * d2
            length = 0
            idx = i
            while True:
                seen[idx] = 1
                length += 1
                n1 = (t11 * k1 + t12 * k2) % d1
                k2 = (t21 * k1 + t22 * k2) % d2
                k1 = n1
                idx = k1 * d2 + k2
                if idx == i:
                    break
            if length == period:
                buf[count] = i
                count += 1
    free(seen)
    return out[:count].copy()
