"""Random observation grids on [0, T] and their overlap geometry.

A grid is an ordered partition of [0, T] induced by a point process; the
overlap matrix of two grids carries all the coupling information the
quasi-likelihood needs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._backend import overlap_pairs

# interior endpoints closer than this (relative to T) to a neighbour are
# merged to protect the 1/sqrt(|I|) scalings
MERGE_TOL = 1e-12


class GridError(ValueError):
    pass


class IntervalGrid:
    """Ordered partition 0 = t_0 < t_1 < ... < t_k = T of the horizon.

    Immutable after construction.  Interval i is [t_{i-1}, t_i]; indices are
    reported 1-based in text output, storage is 0-based.
    """

    __slots__ = ("endpoints",)

    def __init__(self, endpoints) -> None:
        pts = np.asarray(endpoints, dtype=np.float64)
        if pts.ndim != 1 or pts.size < 2:
            raise GridError("grid needs at least two endpoints")
        if pts[0] != 0.0:
            raise GridError("first endpoint must be 0")
        horizon = pts[-1]
        if not horizon > 0.0:
            raise GridError("horizon must be positive")
        if np.any(np.diff(pts) < 0.0):
            raise GridError("endpoints must be increasing")
        pts = _merge_close(pts, MERGE_TOL * horizon)
        if np.any(np.diff(pts) <= 0.0):
            raise GridError("endpoints must be strictly increasing")
        self.endpoints = pts
        self.endpoints.setflags(write=False)

    @property
    def horizon(self) -> float:
        return float(self.endpoints[-1])

    @property
    def count(self) -> int:
        """Number of intervals."""
        return self.endpoints.size - 1

    @property
    def lengths(self) -> np.ndarray:
        return np.diff(self.endpoints)

    @property
    def left(self) -> np.ndarray:
        return self.endpoints[:-1]

    @property
    def right(self) -> np.ndarray:
        return self.endpoints[1:]

    def __repr__(self) -> str:
        return f"IntervalGrid(count={self.count}, T={self.horizon})"

    def __eq__(self, other) -> bool:
        return isinstance(other, IntervalGrid) and np.array_equal(
            self.endpoints, other.endpoints
        )


def _merge_close(pts: np.ndarray, tol: float) -> np.ndarray:
    """Drop interior endpoints that sit within ``tol`` of their successor.

    0 and T always survive; an event within ``tol`` of T merges into T.
    """
    if pts.size <= 2:
        return pts
    keep = [pts[0]]
    last = pts[-1]
    for t in pts[1:-1]:
        if t - keep[-1] > tol and last - t > tol:
            keep.append(t)
    keep.append(last)
    return np.asarray(keep)


@dataclass(frozen=True)
class SamplingScheme:
    """Observation-time law: homogeneous Poisson or deterministic equispaced.

    ``scale`` is the rate factor b_n; a Poisson scheme fires events at rate
    ``intensity * scale`` so the expected event count on [0, T] is
    ``intensity * scale * T``.
    """

    kind: str  # "poisson" | "equispaced"
    horizon: float
    scale: float = 1.0
    intensity: float | None = None
    count: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("poisson", "equispaced"):
            raise GridError(f"unknown sampling kind {self.kind!r}")
        if not self.horizon > 0.0:
            raise GridError("horizon must be positive")
        if not self.scale >= 1.0:
            raise GridError("scale b_n must be >= 1")
        if self.kind == "poisson":
            if self.intensity is None or not self.intensity > 0.0:
                raise GridError("poisson scheme needs intensity > 0")
        else:
            if self.count is None or self.count < 1:
                raise GridError("equispaced scheme needs count >= 1")

    @classmethod
    def poisson(cls, intensity: float, scale: float, horizon: float) -> "SamplingScheme":
        return cls(kind="poisson", horizon=horizon, scale=scale, intensity=intensity)

    @classmethod
    def equispaced(cls, count: int, horizon: float, scale: float | None = None) -> "SamplingScheme":
        return cls(
            kind="equispaced",
            horizon=horizon,
            scale=float(count) if scale is None else scale,
            count=count,
        )


def generate_grid(scheme: SamplingScheme, rng: np.random.Generator) -> IntervalGrid:
    """Draw one observation grid.

    Poisson event times are uniform order statistics given the event count
    (rate ``intensity * scale`` on [0, T]); the final interval is truncated
    at T.  Zero events give the single interval [0, T].
    """
    T = scheme.horizon
    if scheme.kind == "equispaced":
        return IntervalGrid(np.linspace(0.0, T, scheme.count + 1))
    n = rng.poisson(scheme.intensity * scheme.scale * T)
    if n == 0:
        return IntervalGrid([0.0, T])
    times = np.sort(rng.uniform(0.0, T, size=n))
    return IntervalGrid(np.concatenate(([0.0], times, [T])))


class OverlapMatrix:
    """Normalized interval-overlap matrix G of a grid pair.

    G[i, j] = |I_i ∩ J_j| / sqrt(|I_i| |J_j|); all entries in [0, 1] and the
    operator norm is at most 1.  Symmetric-power traces are memoized since
    the spectral functionals request many orders of the same matrix.
    """

    def __init__(self, entries: np.ndarray, pairs=None) -> None:
        self.entries = entries
        self.entries.setflags(write=False)
        # (ii, jj, ov) triplets of the generating sweep, when available
        self.pairs = pairs
        self._pow_cache: dict[tuple[int, int], np.ndarray] = {}

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    def gram(self, which: int) -> np.ndarray:
        """G G^T for which=1, G^T G for which=2."""
        if which == 1:
            return self.entries @ self.entries.T
        if which == 2:
            return self.entries.T @ self.entries
        raise ValueError("which must be 1 or 2")

    def gram_power(self, p: int, which: int) -> np.ndarray:
        """p-th power of the chosen Gram matrix, memoized."""
        if p < 0:
            raise ValueError("p must be >= 0")
        n = self.shape[0] if which == 1 else self.shape[1]
        if p == 0:
            return np.eye(n)
        key = (which, p)
        if key not in self._pow_cache:
            if p == 1:
                self._pow_cache[key] = self.gram(which)
            else:
                self._pow_cache[key] = self.gram_power(p - 1, which) @ self.gram_power(1, which)
        return self._pow_cache[key]

    def gram_eigenvalues(self) -> np.ndarray:
        """Eigenvalues of the smaller Gram matrix, ascending.

        G G^T and G^T G share their nonzero spectrum; the remaining
        eigenvalues are zero.
        """
        key = (0, -1)
        if key not in self._pow_cache:
            which = 1 if self.shape[0] <= self.shape[1] else 2
            self._pow_cache[key] = np.linalg.eigvalsh(self.gram(which))
        return self._pow_cache[key]


def overlap_matrix(grid1: IntervalGrid, grid2: IntervalGrid) -> OverlapMatrix:
    """Dense overlap matrix via a two-pointer sweep, O(l + m + #overlaps)."""
    if not np.isclose(grid1.horizon, grid2.horizon, rtol=0.0, atol=0.0):
        raise GridError(
            f"grids cover different horizons: {grid1.horizon} vs {grid2.horizon}"
        )
    ii, jj, ov = overlap_pairs(grid1.endpoints, grid2.endpoints)
    G = np.zeros((grid1.count, grid2.count))
    G[ii, jj] = ov / np.sqrt(grid1.lengths[ii] * grid2.lengths[jj])
    return OverlapMatrix(G, pairs=(ii, jj, ov))


def grid_mesh(grid1: IntervalGrid, grid2: IntervalGrid) -> float:
    """Largest interval length across both grids (the mesh r_n)."""
    return float(max(grid1.lengths.max(), grid2.lengths.max()))


def write_grids(path, grids) -> None:
    """Two-column text table (grid id, endpoint), 17 significant digits."""
    with open(path, "w") as fh:
        fh.write("# grid_id endpoint\n")
        for gid, grid in enumerate(grids, start=1):
            for t in grid.endpoints:
                fh.write(f"{gid} {t:.17g}\n")


def read_grids(path) -> list[IntervalGrid]:
    """Inverse of :func:`write_grids`; round-trips bit-exactly."""
    by_id: dict[int, list[float]] = {}
    order: list[int] = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise GridError(f"{path}:{lineno}: expected 'grid_id endpoint'")
            try:
                gid = int(parts[0])
                t = float(parts[1])
            except ValueError as exc:
                raise GridError(f"{path}:{lineno}: {exc}") from exc
            if gid not in by_id:
                by_id[gid] = []
                order.append(gid)
            by_id[gid].append(t)
    return [IntervalGrid(by_id[gid]) for gid in order]
