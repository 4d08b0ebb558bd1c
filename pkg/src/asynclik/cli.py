"""Command-line front end.

Subcommands: ``simulate``, ``estimate``, ``table``, ``asymptotics``.  All of
them accept ``--config FILE`` plus repeatable ``--set key=value`` overrides;
exit code 0 on success, 1 on any error.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .config import ConfigError, load_config
from .harness import (
    describe_observations,
    replication_rng,
    run_asymptotics,
    run_single,
    run_table,
    simulate_cmd,
    simulate_dataset,
    summary_text,
)
from .simulate import ModelError, read_observations, write_observations


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=None, help="flat key=value config file")
    p.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override one config key (repeatable)",
    )


def _collect_overrides(pairs: list[str]) -> dict[str, str]:
    out = {}
    for item in pairs:
        if "=" not in item:
            raise ConfigError(f"--set needs KEY=VALUE, got {item!r}")
        key, _, value = item.partition("=")
        out[key.strip()] = value.strip()
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="asynclik",
        description="Quasi-likelihood estimation for nonsynchronously observed bivariate diffusions",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="draw grids and increments; optional dumps")
    _add_common(p_sim)
    p_sim.add_argument("--obs-out", default=None, help="write the observation table here")

    p_est = sub.add_parser("estimate", help="estimate one dataset (fresh or loaded)")
    _add_common(p_est)
    p_est.add_argument("--data", default=None, help="observation table to load instead of simulating")

    p_tab = sub.add_parser("table", help="Monte Carlo replication table -> CSV + summary")
    _add_common(p_tab)

    p_asy = sub.add_parser("asymptotics", help="scheme coefficients, information matrix, variances")
    _add_common(p_asy)
    p_asy.add_argument("--report-out", default=None, help="write the key-value report here")

    return parser


def _print_report(report, cfg) -> None:
    if report is None:
        return
    if not np.all(np.isnan(report.sigma_hat)):
        vals = " ".join(f"{v:.4g}" for v in report.sigma_hat)
        print(f"sigma_hat = ({vals})  loglik = {report.loglik:.4g} "
              f"converged = {report.converged} iterations = {report.iterations}")
        if report.plugin is not None:
            print(f"plugin cross-covariance = {report.plugin:.4g}")
        if report.boundary:
            print("warning: estimate on the parameter-box boundary")
    if report.hy is not None:
        print(f"hayashi-yoshida = {report.hy:.4g}")
    if report.sigma_tilde is not None:
        vals = " ".join(f"{v:.4g}" for v in report.sigma_tilde)
        print(f"sigma_tilde = ({vals})")
    for note in report.warnings:
        print(f"warning: {note}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config, _collect_overrides(args.overrides))
        if args.command == "simulate":
            obs = simulate_cmd(cfg)
            if args.obs_out:
                write_observations(obs, args.obs_out)
        elif args.command == "estimate":
            if args.data:
                obs = read_observations(args.data)
            else:
                n = cfg.n_values[0]
                obs = simulate_dataset(cfg, n, replication_rng(cfg.seed, n, 0))
            print(describe_observations(obs))
            report = run_single(cfg, obs=obs)
            if report is not None:
                _print_report(report, cfg)
        elif args.command == "table":
            rows = run_table(cfg, csv_file=cfg.out, summary_file=None)
            text = summary_text(cfg, rows)
            if cfg.out:
                with open(cfg.out + ".summary.txt", "w") as fh:
                    fh.write(text)
            print(text, end="")
        elif args.command == "asymptotics":
            run_asymptotics(cfg, out=args.report_out)
    except (ConfigError, ModelError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
