# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled trial kernel. Mirrors ``qlidar._kernels_py`` bit for bit."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef double INV_2_53 = 1.0 / 9007199254740992.0


cdef inline uint64_t mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline double uniform(uint64_t key, uint64_t step) noexcept nogil:
    return <double>(mix64(key + (step + 1) * GOLDEN) >> 11) * INV_2_53


cdef inline Py_ssize_t draw(const double[::1] cdf, double u) noexcept nogil:
    # first index with cdf[idx] > u, clipped to the last index
    cdef Py_ssize_t lo = 0, hi = cdf.shape[0], mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if cdf[mid] <= u:
            lo = mid + 1
        else:
            hi = mid
    if lo >= cdf.shape[0]:
        lo = cdf.shape[0] - 1
    return lo


def simulate_counts(const double[::1] cdf_good, const double[::1] cdf_bad,
                    uint64_t cell_key, Py_ssize_t runs, Py_ssize_t n_c,
                    Py_ssize_t s_eff):
    out = np.zeros((runs, 4), dtype=np.int64)
    cdef int64_t[:, ::1] res = out
    cdef Py_ssize_t t, i
    cdef uint64_t key
    cdef bint b1, b2
    cdef int64_t good_only, bad_only, n1, n2
    with nogil:
        for t in range(runs):
            key = mix64(cell_key ^ mix64(<uint64_t>t + GOLDEN))
            good_only = 0
            bad_only = 0
            n1 = 0
            n2 = 0
            for i in range(n_c):
                b1 = draw(cdf_good, uniform(key, 2 * i)) >= s_eff
                b2 = draw(cdf_bad, uniform(key, 2 * i + 1)) >= s_eff
                n1 += b1
                n2 += b2
                good_only += b1 and not b2
                bad_only += b2 and not b1
            res[t, 0] = good_only
            res[t, 1] = bad_only
            res[t, 2] = n1
            res[t, 3] = n2
    return out
