# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: interval sweeps and the constant-model likelihood.

Pure-python twins live in ``_kernels_py.py``; keep the two in sync.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport log

cnp.import_array()


def overlap_pairs(const double[::1] e1, const double[::1] e2):
    """Two-pointer sweep; see ``_kernels_py.overlap_pairs``."""
    cdef Py_ssize_t l = e1.shape[0] - 1
    cdef Py_ssize_t m = e2.shape[0] - 1
    cdef Py_ssize_t cap = l + m
    cdef cnp.ndarray[cnp.int64_t, ndim=1] ii = np.empty(cap, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] jj = np.empty(cap, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ov = np.empty(cap, dtype=np.float64)
    cdef Py_ssize_t i = 0, j = 0, k = 0
    cdef double lo, hi
    while i < l and j < m:
        lo = e1[i] if e1[i] > e2[j] else e2[j]
        hi = e1[i + 1] if e1[i + 1] < e2[j + 1] else e2[j + 1]
        if hi > lo:
            ii[k] = i
            jj[k] = j
            ov[k] = hi - lo
            k += 1
        if e1[i + 1] <= e2[j + 1]:
            i += 1
        else:
            j += 1
    return ii[:k].copy(), jj[:k].copy(), ov[:k].copy()


def hy_sum(const double[::1] e1, const double[::1] e2, const double[::1] y1, const double[::1] y2):
    """Sum of y1[i]*y2[j] over pairs with positive overlap."""
    cdef Py_ssize_t l = e1.shape[0] - 1
    cdef Py_ssize_t m = e2.shape[0] - 1
    cdef Py_ssize_t i = 0, j = 0
    cdef double lo, hi, total = 0.0
    while i < l and j < m:
        lo = e1[i] if e1[i] > e2[j] else e2[j]
        hi = e1[i + 1] if e1[i + 1] < e2[j + 1] else e2[j + 1]
        if hi > lo:
            total += y1[i] * y2[j]
        if e1[i + 1] <= e2[j + 1]:
            i += 1
        else:
            j += 1
    return total


def paired_gaussian_loglik(const double[::1] s, const double[::1] a, const double[::1] b,
                           double r1, double r2, long l, long m,
                           double beta1, double beta2, double rho):
    """Constant-model likelihood kernel; see ``_kernels_py``."""
    cdef Py_ssize_t r = s.shape[0]
    cdef Py_ssize_t k
    cdef double d, ak, bk
    cdef double quad = r1 / (beta1 * beta1) + r2 / (beta2 * beta2)
    cdef double logdet = (2.0 * l) * log(beta1) + (2.0 * m) * log(beta2)
    for k in range(r):
        d = 1.0 - (rho * s[k]) * (rho * s[k])
        ak = a[k] / beta1
        bk = b[k] / beta2
        quad += (ak * ak + bk * bk - 2.0 * rho * s[k] * ak * bk) / d
        logdet += log(d)
    return -0.5 * (quad + logdet)
