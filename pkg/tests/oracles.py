"""Independent oracles: deliberately naive implementations used only to
cross-check the library. None of these share code with the package."""

import math

import numpy as np


def laplace_det(M):
    """Determinant by recursive Laplace expansion (exact structure, O(n!))."""
    n = len(M)
    if n == 1:
        return M[0][0]
    total = 0.0
    for j in range(n):
        minor = [row[:j] + row[j + 1 :] for row in M[1:]]
        total += (-1.0) ** j * M[0][j] * laplace_det(minor)
    return total


def adjugate_inverse(M):
    """Matrix inverse via the adjugate (cofactor) formula."""
    n = len(M)
    det = laplace_det(M)
    inv = [[0.0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [
                [M[r][c] for c in range(n) if c != j] for r in range(n) if r != i
            ]
            cof = (-1.0) ** (i + j) * (laplace_det(minor) if minor else 1.0)
            inv[j][i] = cof / det
    return inv, det


def dense_gaussian_loglik_oracle(S_entries, z):
    """-z'S^{-1}z/2 - log det S / 2 via adjugate inverse and Laplace det."""
    inv, det = adjugate_inverse([list(row) for row in S_entries])
    n = len(z)
    quad = sum(z[i] * inv[i][j] * z[j] for i in range(n) for j in range(n))
    return -0.5 * quad - 0.5 * math.log(det)


def build_S_oracle(b1_rows, b2_rows, grid1, grid2):
    """Covariance of the scaled increments, assembled entry by entry from the
    definition (interval-by-interval overlap integrals, no sweep)."""
    l = grid1.count
    m = grid2.count
    S = [[0.0] * (l + m) for _ in range(l + m)]
    for i in range(l):
        S[i][i] = float(np.dot(b1_rows[i], b1_rows[i]))
    for j in range(m):
        S[l + j][l + j] = float(np.dot(b2_rows[j], b2_rows[j]))
    for i in range(l):
        for j in range(m):
            lo = max(grid1.left[i], grid2.left[j])
            hi = min(grid1.right[i], grid2.right[j])
            if hi > lo:
                g = (hi - lo) / math.sqrt(grid1.lengths[i] * grid2.lengths[j])
                v = float(np.dot(b1_rows[i], b2_rows[j])) * g
                S[i][l + j] = v
                S[l + j][i] = v
    return S


def synchronous_bivariate_loglik(z1, z2, cov):
    """Per-increment bivariate Gaussian log-likelihood on synchronous grids:
    sum_k -z_k' cov^{-1} z_k / 2  -  (n/2) log det cov."""
    a, b = cov[0][0], cov[0][1]
    c = cov[1][1]
    det = a * c - b * b
    inv = [[c / det, -b / det], [-b / det, a / det]]
    total = 0.0
    for x, y in zip(z1, z2):
        quad = inv[0][0] * x * x + 2 * inv[0][1] * x * y + inv[1][1] * y * y
        total -= 0.5 * quad
    return total - 0.5 * len(z1) * math.log(det)


def fd4_gradient(f, x, h):
    """Fourth-order central finite-difference gradient."""
    x = np.asarray(x, dtype=np.float64)
    g = np.empty(x.size)
    for i in range(x.size):
        e = np.zeros(x.size)
        e[i] = h
        g[i] = (-f(x + 2 * e) + 8 * f(x + e) - 8 * f(x - e) + f(x - 2 * e)) / (12 * h)
    return g


def equispaced_gap_oracle(B1, B2, rho, rho_star):
    """Closed-form limit-field gap for the synchronous equispaced scheme."""
    return (
        -((B1 - B2) ** 2) / (2 * (1 - rho**2))
        + 1.0
        + math.log(B1 * B2)
        + 0.5 * math.log((1 - rho_star**2) / (1 - rho**2))
        + B1 * B2 * (rho * rho_star - 1.0) / (1 - rho**2)
    )
