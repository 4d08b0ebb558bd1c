"""Gaussian quasi-log-likelihood of asynchronous increments.

The scaled increment vector z = ((Y1(I)/sqrt|I|)_I, (Y2(J)/sqrt|J|)_J) is
treated as centered Gaussian with covariance

    S(sigma) = [[ diag |b1_I|^2          , (b1_I . b2_J) G_IJ ],
                [ (b1_I . b2_J)^T G_IJ^T , diag |b2_J|^2      ]]

and the objective is  -z' S^{-1} z / 2 - log det S / 2.  Three evaluation
routes agree to rounding: a Cholesky factorization of S (any model), a
one-time singular-value factorization of the overlap matrix (constant
models; O(l+m) per parameter afterwards), and a power-series expansion in
the correlation coupling (diagnostic).
"""

from __future__ import annotations

import numpy as np
from scipy import linalg

from ._backend import paired_gaussian_loglik
from .grids import OverlapMatrix, overlap_matrix
from .simulate import DiffusionModel, ObservationSet


class NonPositiveDefiniteError(RuntimeError):
    """S(sigma) is numerically not positive definite."""


class NearSingularCorrelationError(RuntimeError):
    """Correlation bound too close to 1 for the series expansion."""


class QuasiLikelihoodWorkspace:
    """Precomputed geometry for repeated likelihood evaluations on one dataset.

    Owns a mutable cache; share the underlying ObservationSet across threads,
    not the workspace.
    """

    def __init__(self, obs: ObservationSet, model: DiffusionModel) -> None:
        self.obs = obs
        self.model = model
        self.G: OverlapMatrix = overlap_matrix(obs.grid1, obs.grid2)
        len1 = obs.grid1.lengths
        len2 = obs.grid2.lengths
        self.z1 = obs.incr1 / np.sqrt(len1)
        self.z2 = obs.incr2 / np.sqrt(len2)
        self.z = np.concatenate([self.z1, self.z2])
        self._chol_cache: tuple[tuple, np.ndarray] | None = None
        self._factor = None
        if model.constant:
            self._factor = self._build_factorization()

    # -- constant-model factorization -------------------------------------

    def _build_factorization(self):
        U, s, Vt = linalg.svd(self.G.entries, full_matrices=False)
        # singular values cannot exceed 1; clip rounding overshoot so the
        # 2x2 pair blocks stay positive definite for every |rho| < 1
        s = np.minimum(s, 1.0)
        a = U.T @ self.z1
        b = Vt @ self.z2
        r1 = max(float(self.z1 @ self.z1 - a @ a), 0.0)
        r2 = max(float(self.z2 @ self.z2 - b @ b), 0.0)
        return (np.ascontiguousarray(s), np.ascontiguousarray(a),
                np.ascontiguousarray(b), r1, r2)

    # -- per-interval coefficients -----------------------------------------

    def interval_coefficients(self, sigma):
        """b^1 over I-intervals (l, 2) and b^2 over J-intervals (m, 2).

        Each row is the coefficient evaluated at the covariate snapshot at
        the interval's left endpoint; constant models evaluate once.
        """
        sigma = np.asarray(sigma, dtype=np.float64)
        if self.model.constant:
            b = self.model.coefficients(None, sigma)
            b1 = np.tile(b[0], (self.obs.grid1.count, 1))
            b2 = np.tile(b[1], (self.obs.grid2.count, 1))
            return b1, b2
        if self.obs.cov1 is None or self.obs.cov2 is None:
            raise ValueError("non-constant model needs covariate snapshots")
        b1 = np.empty((self.obs.grid1.count, 2))
        b2 = np.empty((self.obs.grid2.count, 2))
        for k in range(self.obs.grid1.count):
            b1[k] = self.model.coefficients(self.obs.cov1[k], sigma)[0]
        for k in range(self.obs.grid2.count):
            b2[k] = self.model.coefficients(self.obs.cov2[k], sigma)[1]
        return b1, b2

    # -- covariance assembly and direct evaluation --------------------------

    def covariance(self, sigma) -> np.ndarray:
        """Dense model covariance S(sigma) of the scaled increment vector."""
        b1, b2 = self.interval_coefficients(sigma)
        l = self.obs.grid1.count
        m = self.obs.grid2.count
        S = np.zeros((l + m, l + m))
        S[:l, :l] = np.diag(np.sum(b1 * b1, axis=1))
        S[l:, l:] = np.diag(np.sum(b2 * b2, axis=1))
        cross = (b1 @ b2.T) * self.G.entries
        S[:l, l:] = cross
        S[l:, :l] = cross.T
        return S

    def loglik(self, sigma, method: str = "auto") -> float:
        """Quasi-log-likelihood at sigma.

        ``method='cholesky'`` factorizes S(sigma); ``'factor'`` uses the
        overlap-matrix factorization (constant models only); ``'auto'``
        picks the factored route when available.  Raises
        NonPositiveDefiniteError if the Cholesky pivots fail.
        """
        if method == "auto":
            method = "factor" if self._factor is not None else "cholesky"
        if method == "factor":
            if self._factor is None:
                raise ValueError("factored evaluation needs a constant model")
            s, a, b, r1, r2 = self._factor
            beta1, beta2, rho = self.model.norms_and_corr(None, sigma)
            return float(
                paired_gaussian_loglik(
                    s, a, b, r1, r2,
                    self.obs.grid1.count, self.obs.grid2.count,
                    beta1, beta2, rho,
                )
            )
        if method != "cholesky":
            raise ValueError(f"unknown method {method!r}")
        key = tuple(np.asarray(sigma, dtype=np.float64))
        if self._chol_cache is not None and self._chol_cache[0] == key:
            L = self._chol_cache[1]
        else:
            S = self.covariance(sigma)
            try:
                L = linalg.cholesky(S, lower=True)
            except linalg.LinAlgError as exc:
                raise NonPositiveDefiniteError(
                    f"covariance not positive definite at sigma={key}"
                ) from exc
            self._chol_cache = (key, L)
        w = linalg.solve_triangular(L, self.z, lower=True)
        return float(-0.5 * (w @ w) - np.sum(np.log(np.diag(L))))

    # -- series evaluation ---------------------------------------------------

    def correlation_bound(self, sigma) -> float:
        """Largest |rho| over interval pairs and covariate snapshots."""
        if self.model.constant:
            return abs(self.model.norms_and_corr(None, sigma)[2])
        b1, b2 = self.interval_coefficients(sigma)
        n1 = np.sqrt(np.sum(b1 * b1, axis=1))
        n2 = np.sqrt(np.sum(b2 * b2, axis=1))
        ii, jj, _ = self.G.pairs
        pair = np.abs(np.sum(b1[ii] * b2[jj], axis=1) / (n1[ii] * n2[jj]))
        snap = [
            abs(self.model.norms_and_corr(x, sigma)[2])
            for x in np.vstack([self.obs.cov1, self.obs.cov2])
        ]
        return float(max(pair.max(initial=0.0), max(snap)))

    def loglik_series(self, sigma, tol: float = 1e-10) -> tuple[float, int]:
        """Series evaluation of the same objective, with the term count used.

        Expands around the uncorrelated model: with D = diag(|b1_I|, |b2_J|)
        and the coupling matrix C = {rho_IJ G_IJ}, sums

            -1/2 Z' sum_p (-C~)^p Z - log det D + 1/2 sum_p (-1)^p tr(C~^p)/p

        truncating once the geometric bound rhobar^p (l+m) drops below tol.
        """
        rhobar = self.correlation_bound(sigma)
        if rhobar >= 1.0 - 1e-6:
            raise NearSingularCorrelationError(
                f"correlation bound {rhobar:.8f} too close to 1"
            )
        b1, b2 = self.interval_coefficients(sigma)
        n1 = np.sqrt(np.sum(b1 * b1, axis=1))
        n2 = np.sqrt(np.sum(b2 * b2, axis=1))
        l = self.obs.grid1.count
        m = self.obs.grid2.count
        C = (b1 @ b2.T) * self.G.entries / np.outer(n1, n2)
        K = np.zeros((l + m, l + m))
        K[:l, l:] = C
        K[l:, :l] = C.T
        Z = np.concatenate([self.z1 / n1, self.z2 / n2])
        eta = np.linalg.eigvalsh(K)
        quad = 0.0
        trace_part = 0.0
        v = Z.copy()
        p = 0
        sign = 1.0
        while True:
            quad += sign * float(Z @ v)
            if p >= 1:
                trace_part += sign / p * float(np.sum(eta**p))
            if p >= 1 and rhobar ** (p + 1) * (l + m) < tol:
                break
            v = K @ v
            p += 1
            sign = -sign
        logdet_d = float(np.sum(np.log(n1)) + np.sum(np.log(n2)))
        return float(-0.5 * quad - logdet_d + 0.5 * trace_part), p

    # -- finite-difference derivatives ---------------------------------------

    def grad_hess(self, sigma, rel_step: float = 1e-5):
        """Central finite differences of the log-likelihood over the box."""
        return fd_grad_hess(self.loglik, sigma, self.model.param_box, rel_step)


def fd_grad_hess(f, sigma, box=None, rel_step: float = 1e-5):
    """Central-difference gradient and Hessian of a scalar function.

    Per-coordinate step max(rel_step, rel_step * |sigma_i|), shrunk to half
    the distance to the box when needed; below 1e-8 the margin is declared
    insufficient.  The Hessian is symmetric by construction.
    """
    sigma = np.asarray(sigma, dtype=np.float64)
    h = np.maximum(rel_step, rel_step * np.abs(sigma))
    if box is not None:
        box = np.asarray(box, dtype=np.float64)
        margin = np.minimum(sigma - box[:, 0], box[:, 1] - sigma)
        if np.any(margin <= 0.0):
            raise ValueError("sigma must be interior to the parameter box")
        h = np.minimum(h, margin / 2.0)
        if np.any(h < 1e-8):
            raise ValueError("insufficient margin to the box for differencing")
    n = sigma.size
    f0 = f(sigma)
    grad = np.empty(n)
    hess = np.empty((n, n))
    fp = np.empty(n)
    fm = np.empty(n)
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = h[i]
        fp[i] = f(sigma + ei)
        fm[i] = f(sigma - ei)
        grad[i] = (fp[i] - fm[i]) / (2.0 * h[i])
        hess[i, i] = (fp[i] - 2.0 * f0 + fm[i]) / h[i] ** 2
    for i in range(n):
        for j in range(i + 1, n):
            ei = np.zeros(n)
            ej = np.zeros(n)
            ei[i] = h[i]
            ej[j] = h[j]
            fpp = f(sigma + ei + ej)
            fpm = f(sigma + ei - ej)
            fmp = f(sigma - ei + ej)
            fmm = f(sigma - ei - ej)
            hess[i, j] = hess[j, i] = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j])
    return grad, hess
