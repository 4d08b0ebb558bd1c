import numpy as np
import pytest

from asynclik.cli import main
from asynclik.config import ConfigError, ExperimentConfig, load_config
from asynclik.harness import (
    column_stats,
    read_csv_rows,
    run_single,
    run_table,
    summary_text,
)


def small_cfg(**kw):
    base = dict(replications=8, n_values=(30, 60), seed=11, workers=1)
    base.update(kw)
    return ExperimentConfig(**base)


# -- config parsing -----------------------------------------------------------


def test_load_config_file_and_overrides(tmp_path):
    path = tmp_path / "exp.cfg"
    path.write_text(
        "# comment\n"
        "sigma_star = 0.5, 2.0, 1.0\n"
        "n_values = 50 100\n"
        "replications = 3\n"
        "bayes = true\n"
    )
    cfg = load_config(str(path), {"replications": "5"})
    assert cfg.sigma_star == (0.5, 2.0, 1.0)
    assert cfg.n_values == (50, 100)
    assert cfg.replications == 5
    assert cfg.bayes is True


def test_unknown_key_is_named():
    with pytest.raises(ConfigError, match="sigmas_star"):
        load_config(None, {"sigmas_star": "1,1,0.5"})


def test_bad_value_is_named():
    with pytest.raises(ConfigError, match="replications"):
        load_config(None, {"replications": "many"})


def test_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig(sigma_star=(5.0, 1.0, 0.5))  # outside box
    with pytest.raises(ConfigError):
        ExperimentConfig(replications=0)
    with pytest.raises(ConfigError):
        ExperimentConfig(n_values=(0,))
    with pytest.raises(ConfigError):
        ExperimentConfig(scheme="weird")


# -- single-run driver -----------------------------------------------------------


def test_run_single_deterministic():
    cfg = small_cfg(seed=42)
    r1 = run_single(cfg)
    r2 = run_single(cfg)
    assert np.array_equal(r1.sigma_hat, r2.sigma_hat)
    assert r1.hy == r2.hy


def test_run_single_toggles_off_returns_none():
    cfg = small_cfg(qmle=False, hy=False, bayes=False)
    assert run_single(cfg) is None


def test_run_single_hy_only():
    cfg = small_cfg(qmle=False, hy=True)
    report = run_single(cfg)
    assert report.hy is not None
    assert np.all(np.isnan(report.sigma_hat))


def test_run_single_bayes_only():
    cfg = small_cfg(
        qmle=False, hy=False, bayes=True, bayes_nodes=7,
        bayes_box_lo=(0.5, 0.5, 0.0), bayes_box_hi=(1.5, 1.5, 1.0),
    )
    report = run_single(cfg)
    assert report.sigma_tilde is not None
    assert np.all(np.isnan(report.sigma_hat))


# -- table driver ------------------------------------------------------------------


def test_table_rows_and_csv_round_trip(tmp_path):
    out = tmp_path / "t.csv"
    cfg = small_cfg(out=str(out))
    rows = run_table(cfg)
    assert len(rows) == 16
    assert [(r["n"], r["rep"]) for r in rows] == [
        (n, rep) for n in (30, 60) for rep in range(8)
    ]
    back = read_csv_rows(out)
    for a, b in zip(rows, back):
        for col in ("sigma1_hat", "plugin", "hy"):
            assert a[col] == b[col]  # 17 significant digits round-trip


def test_table_deterministic_across_worker_counts(tmp_path):
    out1 = tmp_path / "w1.csv"
    out2 = tmp_path / "w2.csv"
    run_table(small_cfg(out=str(out1), workers=1))
    run_table(small_cfg(out=str(out2), workers=2))
    assert out1.read_bytes() == out2.read_bytes()


def test_summary_recomputable_from_csv(tmp_path):
    out = tmp_path / "t.csv"
    cfg = small_cfg(out=str(out))
    rows = run_table(cfg)
    back = read_csv_rows(out)
    for n in cfg.n_values:
        for col in ("sigma1_hat", "sigma3_hat", "hy"):
            m1, s1, _ = column_stats(rows, n, col)
            m2, s2, _ = column_stats(back, n, col)
            assert m1 == m2 and s1 == s2


def test_summary_single_replication_has_no_sd(tmp_path):
    cfg = small_cfg(replications=1, out=str(tmp_path / "t.csv"))
    rows = run_table(cfg)
    text = summary_text(cfg, rows)
    assert "(-)" in text


# -- command line ---------------------------------------------------------------------


def test_cli_simulate_and_estimate(tmp_path, capsys):
    obs_path = tmp_path / "obs.txt"
    rc = main([
        "simulate", "--set", "n_values=40", "--set", "seed=3",
        "--obs-out", str(obs_path),
    ])
    assert rc == 0
    assert obs_path.exists()
    rc = main(["estimate", "--data", str(obs_path), "--set", "n_values=40"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "sigma_hat" in out


def test_cli_estimate_toggles_off(capsys):
    rc = main([
        "estimate", "--set", "qmle=false", "--set", "hy=false",
        "--set", "n_values=30", "--set", "replications=1",
    ])
    assert rc == 0
    assert "grid1" in capsys.readouterr().out


def test_cli_rejects_unknown_key(capsys):
    rc = main(["table", "--set", "bogus_key=1"])
    assert rc == 1
    assert "bogus_key" in capsys.readouterr().err


def test_cli_data_parse_error_names_line(tmp_path, capsys):
    bad = tmp_path / "obs.txt"
    bad.write_text("1 0.0 0.5 0.1\n2 zero 1.0 0.2\n")
    rc = main(["estimate", "--data", str(bad)])
    assert rc == 1
    assert ":2" in capsys.readouterr().err


def test_cli_table_writes_summary(tmp_path, capsys):
    out = tmp_path / "t.csv"
    rc = main([
        "table", "--set", "replications=2", "--set", "n_values=30",
        "--set", f"out={out}",
    ])
    assert rc == 0
    assert out.exists()
    assert (tmp_path / "t.csv.summary.txt").exists()
    assert "sigma1_hat" in capsys.readouterr().out


def test_cli_asymptotics_equispaced(tmp_path, capsys):
    report_path = tmp_path / "asy.txt"
    rc = main([
        "asymptotics", "--set", "scheme=equispaced",
        "--set", "coeff_order=150",
        "--report-out", str(report_path),
    ])
    assert rc == 0
    text = report_path.read_text()
    v = float([l for l in text.splitlines() if l.startswith("v =")][0].split("=")[1])
    assert v == pytest.approx(1.5, rel=1e-9)


def test_cli_path_dump(tmp_path):
    dump = tmp_path / "path.txt"
    rc = main([
        "simulate", "--set", "sim_method=euler", "--set", "n_values=20",
        "--set", f"dump={dump}",
    ])
    assert rc == 0
    lines = dump.read_text().splitlines()
    assert lines[0].startswith("# t y1 y2")
    assert len(lines) > 20
