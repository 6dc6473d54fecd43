# cython: language_level=3
"""Compiled banded NNLS kernels (same contract as ``_fallback``)."""
import numpy as np
from scipy.linalg import LinAlgError

from libc.math cimport sqrt

NAME = "compiled"


def band_matvec(const double[:, ::1] gband, const double[::1] x):
    cdef Py_ssize_t width = gband.shape[0] - 1
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t i, d, top
    cdef double acc, g, xi
    out_arr = np.empty(n)
    cdef double[::1] out = out_arr
    for i in range(n):
        out[i] = gband[0, i] * x[i]
    for i in range(n):
        xi = x[i]
        acc = 0.0
        top = width if i + width < n else n - 1 - i
        for d in range(1, top + 1):
            g = gband[d, i]
            acc += g * x[i + d]
            out[i + d] += g * xi
        out[i] += acc
    return out_arr


def band_subsolve(const double[:, ::1] gband, free_idx, rhs_in):
    """Cholesky solve of ``G[free][:, free] @ z = rhs`` on the band of G."""
    cdef Py_ssize_t[::1] free = np.ascontiguousarray(free_idx, dtype=np.intp)
    cdef const double[::1] rhs = np.ascontiguousarray(rhs_in, dtype=float)
    cdef Py_ssize_t width = gband.shape[0] - 1
    cdef Py_ssize_t k = free.shape[0]
    cdef Py_ssize_t i, j, d, p, u, lo, gap
    cdef double s, piv
    if k == 0:
        return np.zeros(0)

    # bandwidth of the compressed submatrix in position units
    u = 0
    for j in range(1, k):
        i = j - 1
        while i >= 0 and free[j] - free[i] <= width:
            i -= 1
        if j - 1 - i > u:
            u = j - 1 - i

    # lower band: L[d, j] holds entry (j + d, j)
    L_arr = np.zeros((u + 1, k))
    cdef double[:, ::1] L = L_arr
    for j in range(k):
        for d in range(0, u + 1):
            if j + d >= k:
                break
            gap = free[j + d] - free[j]
            if gap <= width:
                L[d, j] = gband[gap, free[j]]

    # in-place banded Cholesky, column by column
    for j in range(k):
        lo = j - u if j >= u else 0
        s = L[0, j]
        for p in range(lo, j):
            s -= L[j - p, p] * L[j - p, p]
        if s <= 0.0:
            raise LinAlgError("submatrix is not positive definite")
        piv = sqrt(s)
        L[0, j] = piv
        for d in range(1, u + 1):
            i = j + d
            if i >= k:
                break
            s = L[d, j]
            lo = i - u if i >= u else 0
            for p in range(lo, j):
                s -= L[i - p, p] * L[j - p, p]
            L[d, j] = s / piv

    z_arr = np.array(rhs, dtype=float)
    cdef double[::1] z = z_arr
    # forward: L w = rhs
    for i in range(k):
        s = z[i]
        lo = i - u if i >= u else 0
        for p in range(lo, i):
            s -= L[i - p, p] * z[p]
        z[i] = s / L[0, i]
    # backward: L^T z = w
    for i in range(k - 1, -1, -1):
        s = z[i]
        for d in range(1, u + 1):
            if i + d >= k:
                break
            s -= L[d, i] * z[i + d]
        z[i] = s / L[0, i]
    return z_arr
