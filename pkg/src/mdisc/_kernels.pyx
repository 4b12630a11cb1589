# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: qubit tensor-power entries and principal-submatrix scans.

Must stay call-compatible with ``_kernels_py``.
"""

import numpy as np

from libc.math cimport fabs, sqrt
from libc.stdlib cimport malloc, free


cdef extern from *:
    int __builtin_popcountll(unsigned long long x) nogil


def qubit_tensor_power(double a, double b, int n):
    """Entries (-1)^{w(i&j)} a^{n-d(i,j)} b^{d(i,j)} of the n-fold tensor power."""
    if n < 0 or n > 24:
        raise ValueError("n out of range")
    cdef Py_ssize_t dim = (<Py_ssize_t> 1) << n
    out = np.empty((dim, dim), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef double[64] pw
    cdef int d
    for d in range(n + 1):
        pw[d] = (a ** (n - d)) * (b ** d)
    cdef Py_ssize_t i, j
    cdef double v
    with nogil:
        for i in range(dim):
            for j in range(dim):
                v = pw[__builtin_popcountll(<unsigned long long> (i ^ j))]
                if __builtin_popcountll(<unsigned long long> (i & j)) & 1:
                    v = -v
                o[i, j] = v
    return out


cdef double _jacobi_min(double* m, int k) nogil:
    """min |eig| of a symmetric k x k matrix (destroys m)."""
    cdef int p, q, r, sweep
    cdef double off, total, apq, app, aqq, theta, t, c, s, tau, akp, akq
    cdef double lo, x
    for sweep in range(100):
        off = 0.0
        total = 0.0
        for p in range(k):
            total += m[p * k + p] * m[p * k + p]
            for q in range(p + 1, k):
                off += 2.0 * m[p * k + q] * m[p * k + q]
        total += off
        if off <= 1e-30 * total or total == 0.0:
            break
        for p in range(k - 1):
            for q in range(p + 1, k):
                apq = m[p * k + q]
                if apq == 0.0:
                    continue
                app = m[p * k + p]
                aqq = m[q * k + q]
                theta = (aqq - app) / (2.0 * apq)
                if theta >= 0:
                    t = 1.0 / (theta + sqrt(1.0 + theta * theta))
                else:
                    t = -1.0 / (-theta + sqrt(1.0 + theta * theta))
                c = 1.0 / sqrt(1.0 + t * t)
                s = t * c
                tau = s / (1.0 + c)
                m[p * k + p] = app - t * apq
                m[q * k + q] = aqq + t * apq
                m[p * k + q] = 0.0
                m[q * k + p] = 0.0
                for r in range(k):
                    if r == p or r == q:
                        continue
                    akp = m[r * k + p]
                    akq = m[r * k + q]
                    m[r * k + p] = akp - s * (akq + tau * akp)
                    m[p * k + r] = m[r * k + p]
                    m[r * k + q] = akq + s * (akp - tau * akq)
                    m[q * k + r] = m[r * k + q]
    lo = fabs(m[0])
    for p in range(1, k):
        x = fabs(m[p * k + p])
        if x < lo:
            lo = x
    return lo


def scan_principal_submatrices(a, int k, double tol):
    """First size-k index set, lexicographically, whose principal submatrix is singular.

    ``a`` must be real symmetric. Singular means smallest |eigenvalue| <= tol,
    an absolute threshold the caller scales by the norm of ``a``. Returns a
    tuple of indices or None.
    """
    cdef double[:, ::1] A = np.ascontiguousarray(a, dtype=np.float64)
    cdef int n = A.shape[0]
    if k < 1 or k > n:
        return None
    cdef int* idx = <int*> malloc(k * sizeof(int))
    cdef double* buf = <double*> malloc(k * k * sizeof(double))
    cdef int i, j, pos
    cdef bint found = False
    try:
        with nogil:
            for i in range(k):
                idx[i] = i
            while True:
                for i in range(k):
                    for j in range(k):
                        buf[i * k + j] = A[idx[i], idx[j]]
                if _jacobi_min(buf, k) <= tol:
                    found = True
                    break
                pos = k - 1
                while pos >= 0 and idx[pos] == n - k + pos:
                    pos -= 1
                if pos < 0:
                    break
                idx[pos] += 1
                for i in range(pos + 1, k):
                    idx[i] = idx[i - 1] + 1
        if found:
            return tuple(idx[i] for i in range(k))
        return None
    finally:
        free(idx)
        free(buf)
