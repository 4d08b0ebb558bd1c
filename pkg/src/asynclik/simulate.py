"""Bivariate diffusion simulation and extraction of asynchronous increments.

Two routes produce an :class:`ObservationSet`:

* :func:`simulate_path` + :func:`observe` — Euler-Maruyama on a uniform fine
  grid, observation times snapped to fine-grid nodes (general models);
* :func:`simulate_observations_exact` — exact Gaussian increments on the
  union of the two observation grids (models with state-independent
  coefficients, where the Euler step is exact at any spacing).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .grids import GridError, IntervalGrid


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class DiffusionModel:
    """Parametric diffusion-coefficient map sigma -> b(x, sigma).

    ``diffusion(x, sigma)`` returns the 2x2 coefficient matrix whose rows are
    b^1 and b^2.  ``param_box`` is the open parameter box as an (n1, 2) array
    of (lo, hi) pairs.  ``ellipticity`` is the declared uniform lower bound on
    det(b b^T) over the box.  ``constant=True`` marks maps that ignore the
    covariate, which unlocks the exact simulation route and the factored
    likelihood evaluation.
    """

    dim_param: int
    param_box: np.ndarray
    diffusion: Callable[[np.ndarray | None, np.ndarray], np.ndarray]
    ellipticity: float
    drift: Callable[[float, np.ndarray], np.ndarray] | np.ndarray | None = None
    covariate_dim: int = 0
    covariate: Callable[[float, np.ndarray], np.ndarray] | None = None
    constant: bool = False

    def __post_init__(self) -> None:
        box = np.asarray(self.param_box, dtype=np.float64)
        if box.shape != (self.dim_param, 2) or np.any(box[:, 0] >= box[:, 1]):
            raise ModelError("param_box must be (n1, 2) with lo < hi")
        object.__setattr__(self, "param_box", box)
        if not self.ellipticity > 0.0:
            raise ModelError("ellipticity bound must be positive")
        for sigma in self._probe_points():
            x = np.zeros(self.covariate_dim) if self.covariate_dim else None
            b = self.coefficients(x, sigma)
            if np.linalg.det(b @ b.T) < self.ellipticity * (1.0 - 1e-9):
                raise ModelError(
                    f"det(b b^T) below declared ellipticity at sigma={sigma}"
                )

    def _probe_points(self):
        box = self.param_box
        mid = 0.5 * (box[:, 0] + box[:, 1])
        yield mid
        # box corners, nudged inward (the box is open)
        eps = 1e-6 * (box[:, 1] - box[:, 0])
        for mask in range(2 ** self.dim_param):
            corner = np.where(
                [(mask >> i) & 1 for i in range(self.dim_param)],
                box[:, 1] - eps,
                box[:, 0] + eps,
            )
            yield corner

    def contains(self, sigma, margin: float = 0.0) -> bool:
        sigma = np.asarray(sigma, dtype=np.float64)
        lo = self.param_box[:, 0] + margin
        hi = self.param_box[:, 1] - margin
        return bool(np.all(sigma > lo) and np.all(sigma < hi))

    def coefficients(self, x, sigma) -> np.ndarray:
        b = np.asarray(self.diffusion(x, np.asarray(sigma, dtype=np.float64)), dtype=np.float64)
        if b.shape != (2, 2):
            raise ModelError("diffusion map must return a 2x2 matrix")
        return b

    def norms_and_corr(self, x, sigma) -> tuple[float, float, float]:
        """(|b^1|, |b^2|, rho) at the given covariate and parameter."""
        b = self.coefficients(x, sigma)
        n1 = float(np.hypot(b[0, 0], b[0, 1]))
        n2 = float(np.hypot(b[1, 0], b[1, 1]))
        rho = float(np.dot(b[0], b[1]) / (n1 * n2))
        return n1, n2, rho


def example1_model(eps: float = 0.1, bound: float = 3.0) -> DiffusionModel:
    """Constant-coefficient model dY1 = s1 dW1, dY2 = s3 dW1 + s2 dW2.

    Parameter box (eps, bound) x (eps, bound) x (-bound, bound).
    """

    def diffusion(x, sigma):
        s1, s2, s3 = sigma
        return np.array([[s1, 0.0], [s3, s2]])

    return DiffusionModel(
        dim_param=3,
        param_box=np.array([[eps, bound], [eps, bound], [-bound, bound]]),
        diffusion=diffusion,
        ellipticity=(eps * eps) ** 2,
        constant=True,
    )


@dataclass(frozen=True)
class FinePath:
    """Discretized trajectory: times (N+1,), y (N+1, 2), optional x (N+1, n2)."""

    times: np.ndarray
    y: np.ndarray
    x: np.ndarray | None = None

    @property
    def step(self) -> float:
        return float(self.times[1] - self.times[0])


@dataclass(frozen=True)
class ObservationSet:
    """Two grids with the matching asynchronous increments.

    ``cov1``/``cov2`` hold the covariate snapshot at each interval's left
    endpoint (None for covariate-free models).
    """

    grid1: IntervalGrid
    grid2: IntervalGrid
    incr1: np.ndarray
    incr2: np.ndarray
    cov1: np.ndarray | None = None
    cov2: np.ndarray | None = None

    def __post_init__(self) -> None:
        if len(self.incr1) != self.grid1.count or len(self.incr2) != self.grid2.count:
            raise ModelError("increment lengths must match grid interval counts")
        for cov, grid in ((self.cov1, self.grid1), (self.cov2, self.grid2)):
            if cov is not None and cov.shape[0] != grid.count:
                raise ModelError("covariate snapshots must match interval counts")

    @property
    def horizon(self) -> float:
        return self.grid1.horizon


def _drift_at(drift, t, y) -> np.ndarray:
    if drift is None:
        return np.zeros(2)
    if callable(drift):
        return np.asarray(drift(t, y), dtype=np.float64)
    return np.asarray(drift, dtype=np.float64)


def default_fine_steps(model_counts: int) -> int:
    """16 x the expected maximum observation count."""
    return 16 * max(int(model_counts), 1)


def simulate_path(
    model: DiffusionModel,
    sigma_star,
    T: float,
    fine_steps: int,
    rng: np.random.Generator,
    y0=(0.0, 0.0),
) -> FinePath:
    """Euler-Maruyama on the uniform fine grid.

    Exact in law for constant-coefficient models at any step size.
    """
    sigma_star = np.asarray(sigma_star, dtype=np.float64)
    if not model.contains(sigma_star):
        raise ModelError(f"sigma*={sigma_star} outside the parameter box")
    dt = T / fine_steps
    times = np.linspace(0.0, T, fine_steps + 1)
    y = np.empty((fine_steps + 1, 2))
    y[0] = y0
    x = None
    if model.covariate_dim:
        x = np.empty((fine_steps + 1, model.covariate_dim))
    dW = rng.normal(scale=np.sqrt(dt), size=(fine_steps, 2))
    xk = None
    for k in range(fine_steps):
        if x is not None:
            xk = np.asarray(model.covariate(times[k], y[k]), dtype=np.float64)
            x[k] = xk
        b = model.coefficients(xk, sigma_star)
        mu = _drift_at(model.drift, times[k], y[k])
        y[k + 1] = y[k] + mu * dt + b @ dW[k]
    if x is not None:
        x[-1] = np.asarray(model.covariate(times[-1], y[-1]), dtype=np.float64)
    return FinePath(times=times, y=y, x=x)


def _snap_grid(grid: IntervalGrid, path: FinePath) -> tuple[IntervalGrid, np.ndarray]:
    """Snap grid endpoints to nearest fine nodes; collisions merge."""
    idx = np.rint(grid.endpoints / path.step).astype(np.int64)
    idx[0] = 0
    idx[-1] = len(path.times) - 1
    idx = np.unique(idx)
    snapped = IntervalGrid(path.times[idx])
    return snapped, idx


def observe(path: FinePath, grid1: IntervalGrid, grid2: IntervalGrid) -> ObservationSet:
    """Read asynchronous increments off a fine path.

    Observation times are snapped to the nearest fine node and the returned
    grids are the snapped ones, so increments, interval lengths and covariate
    snapshots all refer to the same partition.
    """
    for g in (grid1, grid2):
        if g.horizon > path.times[-1] + 1e-12:
            raise GridError("grid extends beyond the simulated horizon")
    g1, idx1 = _snap_grid(grid1, path)
    g2, idx2 = _snap_grid(grid2, path)
    incr1 = np.diff(path.y[idx1, 0])
    incr2 = np.diff(path.y[idx2, 1])
    cov1 = cov2 = None
    if path.x is not None:
        cov1 = path.x[idx1[:-1]]
        cov2 = path.x[idx2[:-1]]
    return ObservationSet(grid1=g1, grid2=g2, incr1=incr1, incr2=incr2, cov1=cov1, cov2=cov2)


def simulate_observations_exact(
    model: DiffusionModel,
    sigma_star,
    grid1: IntervalGrid,
    grid2: IntervalGrid,
    rng: np.random.Generator,
) -> ObservationSet:
    """Exact Gaussian increments at the true observation times.

    Requires a constant-coefficient model; drift, if any, must be a constant
    vector.  Draws Brownian increments on the union partition of the two
    grids and accumulates, so both observation grids see the same driving
    noise.
    """
    if not model.constant:
        raise ModelError("exact sampling needs constant coefficients; use simulate_path")
    if model.drift is not None and callable(model.drift):
        raise ModelError("exact sampling supports only constant drift")
    sigma_star = np.asarray(sigma_star, dtype=np.float64)
    if not model.contains(sigma_star):
        raise ModelError(f"sigma*={sigma_star} outside the parameter box")
    nodes = np.union1d(grid1.endpoints, grid2.endpoints)
    dt = np.diff(nodes)
    b = model.coefficients(None, sigma_star)
    dW = rng.normal(size=(dt.size, 2)) * np.sqrt(dt)[:, None]
    dY = dW @ b.T
    if model.drift is not None:
        dY += dt[:, None] * np.asarray(model.drift, dtype=np.float64)
    y = np.vstack([np.zeros(2), np.cumsum(dY, axis=0)])
    i1 = np.searchsorted(nodes, grid1.endpoints)
    i2 = np.searchsorted(nodes, grid2.endpoints)
    return ObservationSet(
        grid1=grid1,
        grid2=grid2,
        incr1=np.diff(y[i1, 0]),
        incr2=np.diff(y[i2, 1]),
    )


def write_path(path_obj: FinePath, file) -> None:
    """Text dump (t, Y1, Y2, X...), 17 significant digits per column."""
    own = isinstance(file, str)
    fh = open(file, "w") if own else file
    try:
        ncov = 0 if path_obj.x is None else path_obj.x.shape[1]
        header = "t y1 y2" + "".join(f" x{k + 1}" for k in range(ncov))
        fh.write(f"# {header}\n")
        for k in range(len(path_obj.times)):
            row = [path_obj.times[k], path_obj.y[k, 0], path_obj.y[k, 1]]
            if ncov:
                row.extend(path_obj.x[k])
            fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")
    finally:
        if own:
            fh.close()


def write_observations(obs: ObservationSet, file) -> None:
    """Text dump: one line per interval (grid id, left, right, increment)."""
    own = isinstance(file, str)
    fh = open(file, "w") if own else file
    try:
        fh.write("# grid_id left right increment\n")
        for gid, grid, incr in ((1, obs.grid1, obs.incr1), (2, obs.grid2, obs.incr2)):
            for k in range(grid.count):
                fh.write(
                    f"{gid} {grid.left[k]:.17g} {grid.right[k]:.17g} {incr[k]:.17g}\n"
                )
    finally:
        if own:
            fh.close()


def read_observations(path) -> ObservationSet:
    """Inverse of :func:`write_observations`; parse errors carry line numbers."""
    rows: dict[int, list[tuple[float, float, float]]] = {1: [], 2: []}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 4:
                raise ModelError(
                    f"{path}:{lineno}: expected 'grid_id left right increment'"
                )
            try:
                gid = int(parts[0])
                left, right, incr = (float(v) for v in parts[1:])
            except ValueError as exc:
                raise ModelError(f"{path}:{lineno}: {exc}") from exc
            if gid not in rows:
                raise ModelError(f"{path}:{lineno}: grid id must be 1 or 2")
            rows[gid].append((left, right, incr))
    if not rows[1] or not rows[2]:
        raise ModelError(f"{path}: needs intervals for both grids")
    grids = []
    incrs = []
    for gid in (1, 2):
        lefts = [r[0] for r in rows[gid]]
        rights = [r[1] for r in rows[gid]]
        if lefts[1:] != rights[:-1]:
            raise ModelError(f"{path}: grid {gid} intervals are not contiguous")
        grids.append(IntervalGrid(np.asarray(lefts + [rights[-1]])))
        incrs.append(np.asarray([r[2] for r in rows[gid]]))
    return ObservationSet(grid1=grids[0], grid2=grids[1], incr1=incrs[0], incr2=incrs[1])
