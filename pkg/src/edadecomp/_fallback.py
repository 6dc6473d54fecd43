"""Pure numpy/scipy implementations of the banded NNLS kernels.

``gband`` stores the upper band of a symmetric matrix ``G`` by offset:
``gband[d, i] == G[i, i + d]`` (zero where ``i + d`` is out of range).
"""
import numpy as np
from scipy.linalg import solveh_banded

NAME = "python"


def band_matvec(gband, x):
    gband = np.asarray(gband, dtype=float)
    x = np.asarray(x, dtype=float)
    out = gband[0] * x
    for d in range(1, gband.shape[0]):
        row = gband[d, :-d]
        out[:-d] += row * x[d:]
        out[d:] += row * x[:-d]
    return out


def sub_band(gband, free):
    """Upper band storage (LAPACK layout) of ``G[free][:, free]``."""
    width = gband.shape[0] - 1
    free = np.asarray(free, dtype=np.intp)
    k = free.size
    u = 0
    while u + 1 < k and u + 1 <= width and np.min(free[u + 1:] - free[: k - u - 1]) <= width:
        u += 1
    ab = np.zeros((u + 1, k))
    ab[u] = gband[0, free]
    for d in range(1, u + 1):
        gap = free[d:] - free[:-d]
        ok = gap <= width
        col = np.flatnonzero(ok) + d
        ab[u - d, col] = gband[gap[ok], free[:-d][ok]]
    return ab


def band_subsolve(gband, free, rhs):
    """Solve ``G[free][:, free] @ z = rhs`` for symmetric positive definite G."""
    free = np.asarray(free, dtype=np.intp)
    if free.size == 0:
        return np.zeros(0)
    ab = sub_band(np.asarray(gband, dtype=float), free)
    return solveh_banded(ab, np.asarray(rhs, dtype=float), lower=False, check_finite=False)
