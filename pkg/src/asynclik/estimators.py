"""Point estimators: quasi-MLE, posterior-mean (Bayes type), Hayashi-Yoshida.

The quasi-MLE maximizes the workspace log-likelihood over the parameter box
with a box-aware Nelder-Mead restarted from three starts; the Bayes-type
estimator is the posterior mean under a bounded prior computed by
tensor-product Gauss-Legendre quadrature.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from ._backend import hy_sum
from .likelihood import NonPositiveDefiniteError, QuasiLikelihoodWorkspace
from .simulate import ObservationSet


class EstimationError(RuntimeError):
    pass


@dataclass
class EstimateReport:
    sigma_hat: np.ndarray
    loglik: float
    converged: bool
    boundary: bool
    iterations: int
    n_starts: int = 3
    sigma_tilde: np.ndarray | None = None
    hy: float | None = None
    plugin: float | None = None
    warnings: list[str] = field(default_factory=list)


def nelder_mead_box(f, x0, lo, hi, diameter_tol=1e-6, max_iter=None):
    """Minimize f over the open box (lo, hi) by Nelder-Mead.

    Works in box-scaled coordinates; points outside the box score +inf.
    Terminates when the simplex diameter (sup-norm, scaled coordinates)
    drops below ``diameter_tol``.  Returns (x, fx, iterations, converged).
    """
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    width = hi - lo
    dim = lo.size
    if max_iter is None:
        max_iter = 400 * dim

    def to_x(u):
        return lo + u * width

    def fu(u):
        if np.any(u <= 0.0) or np.any(u >= 1.0):
            return np.inf
        return f(to_x(u))

    u0 = np.clip((np.asarray(x0, dtype=np.float64) - lo) / width, 1e-6, 1.0 - 1e-6)
    step = 0.08
    simplex = [u0]
    for i in range(dim):
        u = u0.copy()
        u[i] = u[i] + step if u[i] + step < 1.0 else u[i] - step
        simplex.append(u)
    simplex = np.asarray(simplex)
    values = np.asarray([fu(u) for u in simplex])

    alpha, gamma, beta, delta = 1.0, 2.0, 0.5, 0.5
    iterations = 0
    converged = False
    while iterations < max_iter:
        order = np.argsort(values, kind="stable")
        simplex = simplex[order]
        values = values[order]
        diameter = np.max(np.abs(simplex[1:] - simplex[0]))
        if diameter < diameter_tol:
            converged = True
            break
        iterations += 1
        centroid = simplex[:-1].mean(axis=0)
        worst = simplex[-1]
        refl = centroid + alpha * (centroid - worst)
        f_refl = fu(refl)
        if f_refl < values[0]:
            expa = centroid + gamma * (refl - centroid)
            f_expa = fu(expa)
            if f_expa < f_refl:
                simplex[-1], values[-1] = expa, f_expa
            else:
                simplex[-1], values[-1] = refl, f_refl
        elif f_refl < values[-2]:
            simplex[-1], values[-1] = refl, f_refl
        else:
            if f_refl < values[-1]:
                contr = centroid + beta * (refl - centroid)
            else:
                contr = centroid + beta * (worst - centroid)
            f_contr = fu(contr)
            if f_contr < min(f_refl, values[-1]):
                simplex[-1], values[-1] = contr, f_contr
            else:
                for k in range(1, dim + 1):
                    simplex[k] = simplex[0] + delta * (simplex[k] - simplex[0])
                    values[k] = fu(simplex[k])
    order = np.argsort(values, kind="stable")
    best = simplex[order[0]]
    return to_x(best), float(values[order[0]]), iterations, converged


def qmle(
    ws: QuasiLikelihoodWorkspace,
    sigma0=None,
    rng: np.random.Generator | None = None,
    diameter_tol: float = 1e-6,
    max_iter: int | None = None,
) -> EstimateReport:
    """Quasi-maximum-likelihood estimate over the model's parameter box.

    Three Nelder-Mead starts (box center, sigma0, one uniform draw); the
    best final value wins, first-found on ties.  A non-positive-definite
    covariance at a trial point scores -inf rather than aborting.
    """
    box = ws.model.param_box
    center = 0.5 * (box[:, 0] + box[:, 1])
    if sigma0 is None:
        sigma0 = center
    sigma0 = np.asarray(sigma0, dtype=np.float64)
    if not ws.model.contains(sigma0):
        raise EstimationError(f"start {sigma0} outside the parameter box")
    if rng is None:
        rng = np.random.default_rng(0)
    starts = [center, sigma0, rng.uniform(box[:, 0], box[:, 1])]

    def neg_loglik(sigma):
        try:
            return -ws.loglik(sigma)
        except NonPositiveDefiniteError:
            return np.inf

    best = None
    total_iter = 0
    any_converged = False
    for start in starts:
        x, fx, iters, conv = nelder_mead_box(
            neg_loglik, start, box[:, 0], box[:, 1],
            diameter_tol=diameter_tol, max_iter=max_iter,
        )
        total_iter += iters
        any_converged = any_converged or conv
        if best is None or fx < best[1]:
            best = (x, fx, conv)
    sigma_hat, fbest, _ = best
    notes = []
    if not any_converged:
        notes.append("no start converged; reporting best point found")
        warnings.warn(notes[-1], RuntimeWarning, stacklevel=2)
    edge = np.minimum(sigma_hat - box[:, 0], box[:, 1] - sigma_hat)
    boundary = bool(np.any(edge < 1e-6 * (box[:, 1] - box[:, 0])))
    if boundary:
        notes.append("estimate on the parameter-box boundary")
    return EstimateReport(
        sigma_hat=sigma_hat,
        loglik=-fbest,
        converged=any_converged,
        boundary=boundary,
        iterations=total_iter,
        warnings=notes,
    )


def posterior_mean(log_density, box, nodes: int = 15, prior=None) -> np.ndarray:
    """Posterior mean of a log-density over a box, by tensor-product
    Gauss-Legendre quadrature with ``nodes`` points per axis.

    Log-density values are shifted by their maximum on the grid before
    exponentiating; a grid on which every value underflows is reported as
    unresolvable posterior mass.
    """
    box = np.asarray(box, dtype=np.float64)
    dim = box.shape[0]
    if dim > 4:
        raise EstimationError("quadrature posterior mean supports at most 4 parameters")
    x01, w01 = np.polynomial.legendre.leggauss(nodes)
    axes = []
    wts = []
    for i in range(dim):
        lo, hi = box[i]
        axes.append(0.5 * (hi - lo) * x01 + 0.5 * (hi + lo))
        wts.append(0.5 * (hi - lo) * w01)
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.stack([m.ravel() for m in mesh], axis=1)
    wmesh = np.meshgrid(*wts, indexing="ij")
    weights = np.prod(np.stack([m.ravel() for m in wmesh], axis=1), axis=1)

    logp = np.asarray([log_density(sigma) for sigma in points], dtype=np.float64)
    if prior is not None:
        pw = np.asarray([prior(sigma) for sigma in points], dtype=np.float64)
        if np.any(pw <= 0.0) or not np.all(np.isfinite(pw)):
            raise EstimationError("prior must be positive and bounded on the box")
    else:
        pw = np.ones(points.shape[0])
    shift = np.max(logp)
    if not np.isfinite(shift):
        raise EstimationError("posterior mass below resolution")
    dens = np.exp(logp - shift) * pw * weights
    denom = float(np.sum(dens))
    if denom <= 0.0 or not np.isfinite(denom):
        raise EstimationError("posterior mass below resolution")
    return (dens @ points) / denom


def bayes(
    ws: QuasiLikelihoodWorkspace,
    prior=None,
    nodes: int = 15,
    box: np.ndarray | None = None,
) -> np.ndarray:
    """Posterior-mean estimate with the quasi-likelihood as log-density."""
    if box is None:
        box = ws.model.param_box

    def log_density(sigma):
        try:
            return ws.loglik(sigma)
        except NonPositiveDefiniteError:
            return -np.inf

    return posterior_mean(log_density, box, nodes=nodes, prior=prior)


def hayashi_yoshida(obs: ObservationSet) -> float:
    """Sum of Y1(I) Y2(J) over interval pairs overlapping on positive length."""
    return float(
        hy_sum(
            obs.grid1.endpoints,
            obs.grid2.endpoints,
            np.ascontiguousarray(obs.incr1, dtype=np.float64),
            np.ascontiguousarray(obs.incr2, dtype=np.float64),
        )
    )


def plugin_crosscov(sigma_hat, T: float) -> float:
    """Cross-variation estimate sigma1*sigma3*T for the two-driver model."""
    sigma_hat = np.asarray(sigma_hat, dtype=np.float64)
    return float(sigma_hat[0] * sigma_hat[2] * T)
