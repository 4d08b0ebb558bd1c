"""Acceptance suite: one test per criterion, one PASS/FAIL line each."""

import time

import numpy as np

from asynclik.asymptotics import (
    estimate_coefficients,
    gamma_general,
    gamma_inv_example1,
    identifiability_gap,
    variance_example1,
)
from asynclik.config import ExperimentConfig
from asynclik.estimators import bayes
from asynclik.grids import IntervalGrid, SamplingScheme, generate_grid, overlap_matrix
from asynclik.harness import (
    model_from_config,
    replication_rng,
    run_replication,
    run_table,
    simulate_dataset,
)
from asynclik.likelihood import QuasiLikelihoodWorkspace
from asynclik.simulate import ObservationSet, example1_model, simulate_observations_exact
from conftest import stats_for
from oracles import (
    build_S_oracle,
    dense_gaussian_loglik_oracle,
    synchronous_bivariate_loglik,
)

SIGMA = (1.0, 1.0, 0.5)


def _report(num, ok, detail):
    print(f"[{'PASS' if ok else 'FAIL'}] criterion {num}: {detail}")
    assert ok, f"criterion {num}: {detail}"


def test_criterion_01_spectral_suite():
    t0 = time.time()
    rng = np.random.default_rng(101)
    lo = hi = None
    for k in range(500):
        bn = 20.0 if k % 2 == 0 else 100.0
        s = SamplingScheme.poisson(1.0, bn, 1.0)
        G = overlap_matrix(generate_grid(s, rng), generate_grid(s, rng))
        lam = np.linalg.eigvalsh(G.gram(2))
        lo = lam.min() if lo is None else min(lo, lam.min())
        hi = lam.max() if hi is None else max(hi, lam.max())
    elapsed = time.time() - t0
    ok = lo >= -1e-10 and hi <= 1 + 1e-10 and elapsed < 30
    _report(1, ok, f"eigenvalues in [{lo:.2e}, {hi:.10f}] over 500 pairs, {elapsed:.1f}s")


def test_criterion_02_positive_definite_suite():
    t0 = time.time()
    rng = np.random.default_rng(102)
    model = example1_model()
    box = model.param_box
    for _ in range(200):
        bn = rng.uniform(20.0, 80.0)
        s = SamplingScheme.poisson(1.0, bn, 1.0)
        g1, g2 = generate_grid(s, rng), generate_grid(s, rng)
        obs = simulate_observations_exact(model, SIGMA, g1, g2, rng)
        ws = QuasiLikelihoodWorkspace(obs, model)
        sigma = rng.uniform(box[:, 0] + 1e-6, box[:, 1] - 1e-6)
        np.linalg.cholesky(ws.covariance(sigma))
    elapsed = time.time() - t0
    _report(2, elapsed < 10, f"200 Cholesky factorizations succeeded, {elapsed:.1f}s")


def test_criterion_03_likelihood_oracles():
    model = example1_model()
    rng = np.random.default_rng(103)
    # synchronous equispaced against the per-increment bivariate oracle
    g = IntervalGrid(np.linspace(0, 1, 51))
    obs = simulate_observations_exact(model, SIGMA, g, g, rng)
    ws = QuasiLikelihoodWorkspace(obs, model)
    scale = np.sqrt(g.lengths)
    worst_sync = 0.0
    for sigma in [(1.0, 1.0, 0.5), (0.7, 1.5, -0.8), (1.6, 0.5, 0.3)]:
        s1, s2, s3 = sigma
        want = synchronous_bivariate_loglik(
            obs.incr1 / scale, obs.incr2 / scale,
            [[s1**2, s1 * s3], [s1 * s3, s2**2 + s3**2]],
        )
        got = ws.loglik(sigma, method="cholesky")
        worst_sync = max(worst_sync, abs(got - want) / abs(want))
    # 20 random asynchronous toys (l+m <= 6) against the adjugate oracle
    worst_toy = 0.0
    box = model.param_box
    for _ in range(20):
        l = rng.integers(1, 4)
        m = rng.integers(1, 7 - l)
        g1 = IntervalGrid(np.concatenate(([0], np.sort(rng.uniform(0, 1, l - 1)), [1])))
        g2 = IntervalGrid(np.concatenate(([0], np.sort(rng.uniform(0, 1, m - 1)), [1])))
        obs = ObservationSet(
            grid1=g1, grid2=g2,
            incr1=rng.normal(size=g1.count), incr2=rng.normal(size=g2.count),
        )
        ws = QuasiLikelihoodWorkspace(obs, model)
        sigma = rng.uniform(box[:, 0] + 0.3, np.minimum(box[:, 1], 2.0))
        b1, b2 = ws.interval_coefficients(sigma)
        want = dense_gaussian_loglik_oracle(
            build_S_oracle(b1, b2, g1, g2),
            np.concatenate([obs.incr1 / np.sqrt(g1.lengths), obs.incr2 / np.sqrt(g2.lengths)]),
        )
        got = ws.loglik(sigma, method="cholesky")
        worst_toy = max(worst_toy, abs(got - want) / abs(want))
    ok = worst_sync < 1e-8 and worst_toy < 1e-10
    _report(3, ok, f"sync rel err {worst_sync:.2e} (tol 1e-8), toy rel err {worst_toy:.2e} (tol 1e-10)")


def test_criterion_04_series_identity():
    rng = np.random.default_rng(104)
    model = example1_model()
    worst = 0.0
    done = 0
    while done < 50:
        bn = rng.uniform(15.0, 60.0)
        s = SamplingScheme.poisson(1.0, bn, 1.0)
        g1, g2 = generate_grid(s, rng), generate_grid(s, rng)
        obs = simulate_observations_exact(model, SIGMA, g1, g2, rng)
        ws = QuasiLikelihoodWorkspace(obs, model)
        sigma = (rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0), rng.uniform(-2.0, 2.0))
        if abs(model.norms_and_corr(None, sigma)[2]) > 0.9:
            continue
        direct = ws.loglik(sigma, method="cholesky")
        series, _ = ws.loglik_series(sigma, tol=1e-10)
        worst = max(worst, abs(series - direct) / abs(direct))
        done += 1
    _report(4, worst < 1e-8, f"series vs direct rel err {worst:.2e} over 50 instances (tol 1e-8)")


def test_criterion_05_hy_variance_closed_form(poisson_coeffs):
    _, v0 = variance_example1(poisson_coeffs, SIGMA, 1.0)
    rows = {50: 0.339, 100: 0.239, 500: 0.107}
    ok = v0 == 5.75
    detail = [f"v0={v0}"]
    for n, printed in rows.items():
        got = np.sqrt(v0 / n)
        ok = ok and abs(got - printed) <= 1e-3
        detail.append(f"sqrt(v0/{n})={got:.4f}")
    _report(5, ok, ", ".join(detail))


def test_criterion_06_coefficient_variance_pipeline():
    t0 = time.time()
    rng = np.random.default_rng(106)
    s1 = SamplingScheme.poisson(1.0, 400.0, 1.0)
    s2 = SamplingScheme.poisson(1.0, 400.0, 1.0)
    coeffs = estimate_coefficients(s1, s2, order=40, reps=500, rng=rng)
    va, v0a = variance_example1(coeffs, (1.0, 1.0, 0.5), 1.0)
    vb, v0b = variance_example1(coeffs, (0.5, 2.0, 1.0), 1.0)
    elapsed = time.time() - t0
    got = np.sqrt(va / 100.0)
    ok = abs(got - 0.161) <= 0.008 and va == vb and v0a == v0b and elapsed < 180
    _report(6, ok, f"sqrt(v/100)={got:.4f} (target 0.161±0.008), "
                   f"parameter sets identical={va == vb and v0a == v0b}, {elapsed:.0f}s")


def test_criterion_07_desk_scale_table(table_rows):
    cfg, rows = table_rows
    elapsed = getattr(cfg, "_elapsed", None)
    mean1, sd1, _ = stats_for(rows, 100, "sigma1_hat")
    mean_h, sd_h, vals_h = stats_for(rows, 100, "hy")
    _, sd2, _ = stats_for(rows, 100, "sigma2_hat")
    _, sd3, _ = stats_for(rows, 100, "sigma3_hat")
    n_reps = 1000
    ok_mean = abs(mean1 - 0.998) <= 3 * sd1 / np.sqrt(n_reps) + 0.005
    targets = {"sd1": (sd1, 0.070), "sd2": (sd2, 0.091), "sd3": (sd3, 0.154), "hy_sd": (sd_h, 0.236)}
    ok_sds = all(abs(got - want) <= 0.15 * want for got, want in targets.values())
    ok_hy = abs(mean_h - 0.5) <= 3 * sd_h / np.sqrt(len(vals_h))
    ok_time = elapsed is None or elapsed < 600
    ok = ok_mean and ok_sds and ok_hy and ok_time
    txt = ", ".join(f"{k}={got:.4f}/{want}" for k, (got, want) in targets.items())
    _report(7, ok, f"mean(s1)={mean1:.4f}, hy_mean={mean_h:.4f}, {txt}"
                   + (f", sweep {elapsed:.0f}s" if elapsed else ""))


def test_criterion_08_clt_covariance(table_rows, poisson_coeffs):
    _, rows = table_rows
    n = 500
    dev = np.array([
        [r["sigma1_hat"] - SIGMA[0], r["sigma2_hat"] - SIGMA[1], r["sigma3_hat"] - SIGMA[2]]
        for r in rows if r["n"] == n
    ])
    sample_cov_diag = np.diag(np.cov((np.sqrt(n) * dev).T, ddof=1))
    model = example1_model()
    Gamma = gamma_general(poisson_coeffs, model, SIGMA, 1.0)
    diag_inv = np.diag(np.linalg.inv(Gamma))
    diag_closed = np.diag(gamma_inv_example1(poisson_coeffs, SIGMA, 1.0))
    ok_routes = np.allclose(diag_inv, diag_closed, rtol=1e-8)
    rel = np.abs(sample_cov_diag - diag_inv) / diag_inv
    ok = ok_routes and np.all(rel < 0.15)
    _report(8, ok, f"sample diag {np.round(sample_cov_diag, 3)} vs "
                   f"Gamma^-1 diag {np.round(diag_inv, 3)}, max rel dev {rel.max():.3f}")


def test_criterion_09_bayes_agreement():
    hw = np.array([0.155, 0.20, 0.335])
    sigma = np.asarray(SIGMA)
    cfg = ExperimentConfig(
        n_values=(500,), replications=200, bayes=True, seed=42,
        bayes_box_lo=tuple(sigma - hw), bayes_box_hi=tuple(sigma + hw),
    )
    diffs = []
    for rep in range(200):
        row = run_replication(cfg, 500, rep)
        tilde = np.array([row["bayes1"], row["bayes2"], row["bayes3"]])
        hat = np.array([row["sigma1_hat"], row["sigma2_hat"], row["sigma3_hat"]])
        diffs.append(np.linalg.norm(tilde - hat))
    mean_diff = float(np.mean(diffs))
    # quadrature refinement on one fixed dataset
    rng = replication_rng(42, 500, 0)
    obs = simulate_dataset(cfg, 500, rng)
    ws = QuasiLikelihoodWorkspace(obs, model_from_config(cfg))
    s15 = bayes(ws, nodes=15, box=cfg.bayes_box)
    s31 = bayes(ws, nodes=31, box=cfg.bayes_box)
    refine = float(np.linalg.norm(s15 - s31))
    ok = mean_diff < 0.02 and refine < 1e-4
    _report(9, ok, f"mean ||tilde-hat|| = {mean_diff:.4f} (tol 0.02), "
                   f"15->31 node shift {refine:.2e} (tol 1e-4)")


def test_criterion_10_identifiability(poisson_coeffs):
    model = example1_model()
    worst = -np.inf
    count = 0
    for a in np.linspace(0.5, 2.0, 6):
        for b in np.linspace(0.5, 2.0, 6):
            for c in np.linspace(-1.5, 1.5, 6):
                sigma = (a, b, c)
                if np.allclose(sigma, SIGMA):
                    continue
                count += 1
                worst = max(worst, identifiability_gap(poisson_coeffs, model, sigma, SIGMA, tol=1e-8))
    ok = count >= 200 and worst < 0
    _report(10, ok, f"{count} lattice points, largest gap {worst:.4f} (must be < 0)")


def test_criterion_11_determinism(tmp_path):
    out1 = tmp_path / "w1.csv"
    out2 = tmp_path / "w2.csv"
    base = dict(replications=20, n_values=(50, 100), seed=42)
    run_table(ExperimentConfig(workers=1, out=str(out1), **base))
    run_table(ExperimentConfig(workers=2, out=str(out2), **base))
    ok = out1.read_bytes() == out2.read_bytes()
    _report(11, ok, f"CSV bodies identical across worker counts: {ok}")
