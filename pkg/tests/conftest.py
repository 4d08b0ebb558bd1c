import time

import numpy as np
import pytest

from asynclik.asymptotics import estimate_coefficients
from asynclik.config import ExperimentConfig
from asynclik.grids import SamplingScheme
from asynclik.harness import run_table


@pytest.fixture(scope="session")
def poisson_coeffs():
    """Scheme constants for the unit-rate Poisson pair (b_n=400, 500 reps)."""
    rng = np.random.default_rng(2024)
    s1 = SamplingScheme.poisson(1.0, 400.0, 1.0)
    s2 = SamplingScheme.poisson(1.0, 400.0, 1.0)
    # the spectral estimator makes high orders free; the long tail keeps the
    # series usable at the largest correlations the parameter box reaches
    return estimate_coefficients(s1, s2, order=200, reps=500, rng=rng)


@pytest.fixture(scope="session")
def table_rows(tmp_path_factory):
    """Desk-scale Monte Carlo table: 1000 replications, n in {50, 100, 500}."""
    out = tmp_path_factory.mktemp("table") / "table.csv"
    cfg = ExperimentConfig(replications=1000, n_values=(50, 100, 500),
                           seed=42, workers=1, out=str(out))
    t0 = time.time()
    rows = run_table(cfg)
    cfg._elapsed = time.time() - t0
    return cfg, rows


def stats_for(rows, n, col):
    vals = np.asarray([r[col] for r in rows if r["n"] == n and r.get(col) is not None])
    return vals.mean(), vals.std(ddof=1), vals
