# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled symmetric-function tables (same contract as ``_kernels_py``)."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef inline void _prefix(const double* lam, int n, int skip_a, int skip_b,
                         double* out) noexcept nogil:
    cdef int j, k
    cdef double v
    out[0] = 1.0
    for k in range(1, n + 1):
        out[k] = 0.0
    for j in range(n):
        if j == skip_a or j == skip_b:
            continue
        v = lam[j]
        for k in range(j + 1, 0, -1):
            out[k] += v * out[k - 1]


def elem_sym_all(lam):
    cdef double[:, ::1] L = np.ascontiguousarray(lam, dtype=np.float64)
    cdef Py_ssize_t m = L.shape[0]
    cdef int n = <int>L.shape[1]
    out = np.empty((m, n + 1), dtype=np.float64)
    cdef double[:, ::1] O = out
    cdef Py_ssize_t r
    with nogil:
        for r in range(m):
            _prefix(&L[r, 0], n, -1, -1, &O[r, 0])
    return out


def sym_tables(lam, bint pairs=True):
    cdef double[:, ::1] L = np.ascontiguousarray(lam, dtype=np.float64)
    cdef Py_ssize_t m = L.shape[0]
    cdef int n = <int>L.shape[1]
    S = np.empty((m, n + 1), dtype=np.float64)
    S1 = np.empty((m, n, n + 1), dtype=np.float64)
    cdef double[:, ::1] vS = S
    cdef double[:, :, ::1] vS1 = S1
    cdef double[:, :, :, ::1] vS2
    cdef Py_ssize_t r
    cdef int i, j, k
    S2 = None
    if pairs:
        S2 = np.zeros((m, n, n, n + 1), dtype=np.float64)
        vS2 = S2
    with nogil:
        for r in range(m):
            _prefix(&L[r, 0], n, -1, -1, &vS[r, 0])
            for i in range(n):
                _prefix(&L[r, 0], n, i, -1, &vS1[r, i, 0])
            if pairs:
                for i in range(n):
                    for j in range(i + 1, n):
                        _prefix(&L[r, 0], n, i, j, &vS2[r, i, j, 0])
                        for k in range(n + 1):
                            vS2[r, j, i, k] = vS2[r, i, j, k]
    return S, S1, S2
