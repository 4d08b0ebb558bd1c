"""Experiment drivers: single-run estimation, Monte Carlo tables, asymptotics.

Every replication owns an independent counter-based random stream keyed by
(seed, n, replication), so the Monte Carlo table is byte-identical however
the work is distributed over workers.
"""

from __future__ import annotations

import io
import sys
from multiprocessing import get_context

import numpy as np

from . import estimators as est
from .asymptotics import (
    AsymptoticsReport,
    DegenerateInformationError,
    SamplingCoefficients,
    corr_series,
    estimate_coefficients,
    gamma_general,
    gamma_inv_example1,
    variance_example1,
    variance_example1_plugin_only,
)
from .config import ExperimentConfig
from .grids import SamplingScheme, generate_grid
from .likelihood import QuasiLikelihoodWorkspace
from .simulate import (
    DiffusionModel,
    ObservationSet,
    default_fine_steps,
    observe,
    simulate_observations_exact,
    simulate_path,
    write_path,
)

CSV_COLUMNS = (
    "n", "rep",
    "sigma1_hat", "sigma2_hat", "sigma3_hat",
    "plugin", "hy",
    "bayes1", "bayes2", "bayes3",
    "converged",
)


def replication_rng(seed: int, n: int, rep: int) -> np.random.Generator:
    """Independent counter-based stream for one replication."""
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(seed, spawn_key=(n, rep)))
    )


def model_from_config(cfg: ExperimentConfig) -> DiffusionModel:
    """Two-driver constant model with the configured box and optional drift."""
    if len(cfg.sigma_star) != 3:
        raise ValueError("the built-in model family has three parameters")
    eps = min(cfg.box_lo[0], cfg.box_lo[1])
    if eps <= 0:
        raise ValueError("box_lo for sigma1/sigma2 must be positive")

    drift = None if cfg.drift is None else np.asarray(cfg.drift, dtype=np.float64)
    return DiffusionModel(
        dim_param=3,
        param_box=cfg.box,
        diffusion=_two_driver_diffusion,
        ellipticity=(eps * eps) ** 2,
        drift=drift,
        constant=True,
    )


def _two_driver_diffusion(x, sigma):
    s1, s2, s3 = sigma
    return np.array([[s1, 0.0], [s3, s2]])


def schemes_for_n(cfg: ExperimentConfig, n: int) -> tuple[SamplingScheme, SamplingScheme]:
    if cfg.scheme == "poisson":
        return (
            SamplingScheme.poisson(cfg.lambda1, float(n), cfg.horizon),
            SamplingScheme.poisson(cfg.lambda2, float(n), cfg.horizon),
        )
    return (
        SamplingScheme.equispaced(n, cfg.horizon),
        SamplingScheme.equispaced(n, cfg.horizon),
    )


def simulate_dataset(cfg: ExperimentConfig, n: int, rng: np.random.Generator) -> ObservationSet:
    """Grids then increments, drawn from the replication's stream."""
    model = model_from_config(cfg)
    s1, s2 = schemes_for_n(cfg, n)
    grid1 = generate_grid(s1, rng)
    grid2 = generate_grid(s2, rng)
    if cfg.sim_method == "exact":
        return simulate_observations_exact(model, cfg.sigma_star, grid1, grid2, rng)
    expected = max(cfg.lambda1, cfg.lambda2) * n * cfg.horizon if cfg.scheme == "poisson" else n
    steps = cfg.fine_steps if cfg.fine_steps > 0 else default_fine_steps(expected)
    path = simulate_path(model, cfg.sigma_star, cfg.horizon, steps, rng)
    return observe(path, grid1, grid2)


def run_replication(cfg: ExperimentConfig, n: int, rep: int) -> dict:
    """One full replication: simulate, estimate, return a CSV row dict."""
    rng = replication_rng(cfg.seed, n, rep)
    obs = simulate_dataset(cfg, n, rng)
    row: dict = {"n": n, "rep": rep}
    ws = None
    if cfg.qmle or cfg.bayes:
        ws = QuasiLikelihoodWorkspace(obs, model_from_config(cfg))
    if cfg.qmle:
        report = est.qmle(ws, sigma0=cfg.start, rng=rng)
        row["sigma1_hat"], row["sigma2_hat"], row["sigma3_hat"] = report.sigma_hat
        row["plugin"] = est.plugin_crosscov(report.sigma_hat, cfg.horizon)
        row["converged"] = int(report.converged)
    if cfg.hy:
        row["hy"] = est.hayashi_yoshida(obs)
    if cfg.bayes:
        row["bayes1"], row["bayes2"], row["bayes3"] = est.bayes(
            ws, nodes=cfg.bayes_nodes, box=cfg.bayes_box
        )
    return row


def _worker(args) -> dict:
    cfg, n, rep = args
    return run_replication(cfg, n, rep)


def run_table(cfg: ExperimentConfig, csv_file=None, summary_file=None) -> list[dict]:
    """Monte Carlo table over (n, replication); rows ordered by that key.

    Writes the CSV body to ``csv_file`` (path or handle; defaults to
    ``cfg.out``) and a human summary to ``summary_file`` when given.
    """
    tasks = [(cfg, n, rep) for n in cfg.n_values for rep in range(cfg.replications)]
    if cfg.workers > 1:
        ctx = get_context()
        with ctx.Pool(processes=cfg.workers) as pool:
            results = pool.map(_worker, tasks, chunksize=16)
    else:
        results = [_worker(t) for t in tasks]
    rows = sorted(results, key=lambda r: (cfg.n_values.index(r["n"]), r["rep"]))
    target = cfg.out if csv_file is None else csv_file
    if target:
        _write_csv(rows, target)
    if summary_file is not None:
        text = summary_text(cfg, rows)
        _write_text(text, summary_file)
    return rows


def _write_text(text: str, target) -> None:
    if isinstance(target, (str, bytes)):
        with open(target, "w") as fh:
            fh.write(text)
    else:
        target.write(text)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{value:.17g}"


def _write_csv(rows: list[dict], target) -> None:
    own = isinstance(target, (str, bytes))
    fh = open(target, "w") if own else target
    try:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(row.get(col)) for col in CSV_COLUMNS) + "\n")
    finally:
        if own:
            fh.close()


def read_csv_rows(path) -> list[dict]:
    rows = []
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        for line in fh:
            vals = line.rstrip("\n").split(",")
            row = {}
            for col, val in zip(header, vals):
                if val == "":
                    row[col] = None
                elif col in ("n", "rep", "converged"):
                    row[col] = int(val)
                else:
                    row[col] = float(val)
            rows.append(row)
    return rows


_SUMMARY_FIELDS = (
    ("sigma1_hat", "sigma1_hat"),
    ("sigma2_hat", "sigma2_hat"),
    ("sigma3_hat", "sigma3_hat"),
    ("plugin", "plugin  "),
    ("hy", "hy      "),
    ("bayes1", "bayes1  "),
    ("bayes2", "bayes2  "),
    ("bayes3", "bayes3  "),
)


def column_stats(rows: list[dict], n: int, col: str) -> tuple[float, float | None, int]:
    """(mean, sample SD or None, count) of a column at one n."""
    vals = np.asarray([r[col] for r in rows if r["n"] == n and r.get(col) is not None])
    if vals.size == 0:
        return np.nan, None, 0
    sd = float(vals.std(ddof=1)) if vals.size > 1 else None
    return float(vals.mean()), sd, int(vals.size)


def summary_text(cfg: ExperimentConfig, rows: list[dict]) -> str:
    """Mean (SD) per estimator per n, 4 significant digits."""
    buf = io.StringIO()
    buf.write(f"# replications={cfg.replications} seed={cfg.seed} "
              f"sigma*={tuple(cfg.sigma_star)} scheme={cfg.scheme}\n")
    header = "estimator    " + "".join(f"{'n=' + str(n):>22}" for n in cfg.n_values)
    buf.write(header + "\n")
    for col, label in _SUMMARY_FIELDS:
        cells = []
        any_val = False
        for n in cfg.n_values:
            mean, sd, count = column_stats(rows, n, col)
            if count == 0:
                cells.append(f"{'-':>22}")
                continue
            any_val = True
            sd_text = f"({sd:.4g})" if sd is not None else "(-)"
            cells.append(f"{mean:>12.4g} {sd_text:>9}")
        if any_val:
            buf.write(label.strip().ljust(13) + "".join(cells) + "\n")
    return buf.getvalue()


def run_single(cfg: ExperimentConfig, obs: ObservationSet | None = None) -> est.EstimateReport | None:
    """Estimate one dataset (fresh simulation unless ``obs`` is given)."""
    n = cfg.n_values[0]
    rng = replication_rng(cfg.seed, n, 0)
    if obs is None:
        obs = simulate_dataset(cfg, n, rng)
    if not (cfg.qmle or cfg.bayes or cfg.hy):
        return None
    report = None
    ws = None
    if cfg.qmle or cfg.bayes:
        ws = QuasiLikelihoodWorkspace(obs, model_from_config(cfg))
    if cfg.qmle:
        report = est.qmle(ws, sigma0=cfg.start, rng=rng)
        report.plugin = est.plugin_crosscov(report.sigma_hat, cfg.horizon)
    if report is None:
        report = est.EstimateReport(
            sigma_hat=np.full(len(cfg.sigma_star), np.nan),
            loglik=np.nan, converged=True, boundary=False, iterations=0,
        )
    if cfg.hy:
        report.hy = est.hayashi_yoshida(obs)
    if cfg.bayes:
        report.sigma_tilde = est.bayes(ws, nodes=cfg.bayes_nodes, box=cfg.bayes_box)
    return report


def run_asymptotics(cfg: ExperimentConfig, out=None, stream=None) -> AsymptoticsReport:
    """Scheme coefficients, information matrix, delta-method variances."""
    stream = stream or sys.stdout
    rng = np.random.Generator(
        np.random.Philox(np.random.SeedSequence(cfg.seed, spawn_key=(0x5EED, 0)))
    )
    if cfg.scheme == "poisson":
        s1 = SamplingScheme.poisson(cfg.lambda1, cfg.coeff_bn, cfg.horizon)
        s2 = SamplingScheme.poisson(cfg.lambda2, cfg.coeff_bn, cfg.horizon)
        coeffs = estimate_coefficients(s1, s2, order=cfg.coeff_order,
                                       reps=cfg.coeff_reps, rng=rng)
    else:
        coeffs = SamplingCoefficients.equispaced(cfg.coeff_order)
    model = model_from_config(cfg)
    sigma_star = np.asarray(cfg.sigma_star)
    Gamma = gamma_general(coeffs, model, sigma_star, cfg.horizon)
    try:
        GammaInv = gamma_inv_example1(coeffs, sigma_star, cfg.horizon)
    except DegenerateInformationError:
        GammaInv = np.linalg.inv(Gamma)
    if np.max(np.abs(Gamma @ GammaInv - np.eye(Gamma.shape[0]))) > 1e-8:
        GammaInv = np.linalg.inv(Gamma)
    _, _, rho = model.norms_and_corr(None, sigma_star)
    ser = corr_series(coeffs, rho)
    if cfg.scheme == "poisson":
        v, v0 = variance_example1(coeffs, sigma_star, cfg.horizon)
    else:
        v = variance_example1_plugin_only(coeffs, sigma_star, cfg.horizon)
        v0 = None
    report = AsymptoticsReport(
        coeffs=coeffs, rho=rho, A=ser["A"], dA=ser["dA"],
        Gamma=Gamma, GammaInv=GammaInv, v=v, v0=v0,
    )
    if out:
        report.save(out)
    stream.write(f"rho = {rho:.4g}  A(rho) = {ser['A']:.4g}  a1 = {coeffs.a[1]:.4g}\n")
    stream.write(f"v = {v:.4g}" + (f"  v0 = {v0:.4g}\n" if v0 is not None else "\n"))
    for n in cfg.n_values:
        line = f"n={n}:  sqrt(v/n) = {np.sqrt(v / n):.4g}"
        if v0 is not None:
            line += f"  sqrt(v0/n) = {np.sqrt(v0 / n):.4g}"
        stream.write(line + "\n")
    return report


def describe_observations(obs: ObservationSet) -> str:
    return (
        f"grid1: {obs.grid1.count} intervals, grid2: {obs.grid2.count} intervals, "
        f"T={obs.horizon:g}, sum(incr1)={obs.incr1.sum():.6g}, "
        f"sum(incr2)={obs.incr2.sum():.6g}"
    )


def simulate_cmd(cfg: ExperimentConfig, stream=None) -> ObservationSet:
    """Simulate one dataset; optional path dump for the Euler route."""
    stream = stream or sys.stdout
    n = cfg.n_values[0]
    rng = replication_rng(cfg.seed, n, 0)
    if cfg.sim_method == "euler" and cfg.dump:
        model = model_from_config(cfg)
        s1, s2 = schemes_for_n(cfg, n)
        grid1 = generate_grid(s1, rng)
        grid2 = generate_grid(s2, rng)
        expected = max(cfg.lambda1, cfg.lambda2) * n * cfg.horizon if cfg.scheme == "poisson" else n
        steps = cfg.fine_steps if cfg.fine_steps > 0 else default_fine_steps(expected)
        path = simulate_path(model, cfg.sigma_star, cfg.horizon, steps, rng)
        write_path(path, cfg.dump)
        obs = observe(path, grid1, grid2)
    else:
        obs = simulate_dataset(cfg, n, rng)
    stream.write(describe_observations(obs) + "\n")
    return obs
