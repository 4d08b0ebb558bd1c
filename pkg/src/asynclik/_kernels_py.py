"""Pure-python reference implementations of the hot kernels.

Selected by :mod:`asynclik._backend` when the compiled extension is not
available (or when ``ASYNCLIK_PURE_PYTHON=1``).  Semantics must match
``_kernels.pyx`` exactly; ``tests/test_kernels.py`` pins the two against
each other.
"""

import numpy as np


def overlap_pairs(e1, e2):
    """Two-pointer sweep over two partitions of the same horizon.

    Parameters are the endpoint arrays (length l+1 and m+1).  Returns
    ``(ii, jj, ov)`` where interval ``ii[k]`` of the first grid and
    ``jj[k]`` of the second overlap on a set of positive length ``ov[k]``.
    Pairs come out in lexicographic (i, j) order.
    """
    e1 = np.asarray(e1, dtype=np.float64)
    e2 = np.asarray(e2, dtype=np.float64)
    l = e1.shape[0] - 1
    m = e2.shape[0] - 1
    ii = []
    jj = []
    ov = []
    i = j = 0
    while i < l and j < m:
        lo = max(e1[i], e2[j])
        hi = min(e1[i + 1], e2[j + 1])
        if hi > lo:
            ii.append(i)
            jj.append(j)
            ov.append(hi - lo)
        # advance the interval that ends first
        if e1[i + 1] <= e2[j + 1]:
            i += 1
        else:
            j += 1
    return (
        np.asarray(ii, dtype=np.int64),
        np.asarray(jj, dtype=np.int64),
        np.asarray(ov, dtype=np.float64),
    )


def hy_sum(e1, e2, y1, y2):
    """Sum of increment products over interval pairs with positive overlap."""
    e1 = np.asarray(e1, dtype=np.float64)
    e2 = np.asarray(e2, dtype=np.float64)
    l = e1.shape[0] - 1
    m = e2.shape[0] - 1
    total = 0.0
    i = j = 0
    while i < l and j < m:
        lo = max(e1[i], e2[j])
        hi = min(e1[i + 1], e2[j + 1])
        if hi > lo:
            total += y1[i] * y2[j]
        if e1[i + 1] <= e2[j + 1]:
            i += 1
        else:
            j += 1
    return total


def paired_gaussian_loglik(s, a, b, r1, r2, l, m, beta1, beta2, rho):
    """Log-likelihood of the scaled increment vector for a constant model.

    ``s`` are the singular values of the overlap matrix, ``a``/``b`` the
    increment coordinates in the corresponding singular bases, ``r1``/``r2``
    the squared norms of the unmatched components.  ``beta1``/``beta2`` are
    |b^1|, |b^2| and ``rho`` the diffusion correlation at the evaluation
    parameter.
    """
    d = 1.0 - (rho * s) ** 2
    ak = a / beta1
    bk = b / beta2
    quad = (
        np.sum((ak * ak + bk * bk - (2.0 * rho) * s * ak * bk) / d)
        + r1 / (beta1 * beta1)
        + r2 / (beta2 * beta2)
    )
    logdet = (
        (2.0 * l) * np.log(beta1)
        + (2.0 * m) * np.log(beta2)
        + np.sum(np.log(d))
    )
    return -0.5 * (quad + logdet)
