"""Flat key-value experiment configuration with typed parsing.

A config file holds ``key = value`` lines (``#`` comments allowed); any key
can also be overridden on the command line via ``--set key=value``.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np


class ConfigError(ValueError):
    pass


def _parse_floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.replace(",", " ").split())


def _parse_ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.replace(",", " ").split())


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


@dataclass
class ExperimentConfig:
    """Experiment frame: model, sampling scheme pair, estimation toggles."""

    sigma_star: tuple[float, ...] = (1.0, 1.0, 0.5)
    box_lo: tuple[float, ...] = (0.1, 0.1, -3.0)
    box_hi: tuple[float, ...] = (3.0, 3.0, 3.0)
    sigma0: tuple[float, ...] | None = None  # QMLE start, defaults to sigma_star
    horizon: float = 1.0
    scheme: str = "poisson"  # poisson | equispaced
    lambda1: float = 1.0
    lambda2: float = 1.0
    n_values: tuple[int, ...] = (50, 100, 500)
    replications: int = 1000
    seed: int = 42
    qmle: bool = True
    hy: bool = True
    bayes: bool = False
    bayes_nodes: int = 15
    bayes_box_lo: tuple[float, ...] | None = None
    bayes_box_hi: tuple[float, ...] | None = None
    drift: tuple[float, ...] | None = None
    sim_method: str = "exact"  # exact | euler
    fine_steps: int = 0  # 0 -> 16 x expected max observation count
    coeff_bn: float = 400.0
    coeff_reps: int = 500
    coeff_order: int = 40
    workers: int = 1
    out: str = "table.csv"
    dump: str = ""

    def __post_init__(self) -> None:
        n1 = len(self.sigma_star)
        if len(self.box_lo) != n1 or len(self.box_hi) != n1:
            raise ConfigError("box_lo/box_hi must match sigma_star length")
        box = np.stack([self.box_lo, self.box_hi], axis=1)
        if np.any(box[:, 0] >= box[:, 1]):
            raise ConfigError("parameter box must have lo < hi")
        if not all(lo < s < hi for s, lo, hi in zip(self.sigma_star, self.box_lo, self.box_hi)):
            raise ConfigError("sigma_star must lie inside the parameter box")
        if self.sigma0 is not None and len(self.sigma0) != n1:
            raise ConfigError("sigma0 must match sigma_star length")
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        if any(n <= 0 for n in self.n_values):
            raise ConfigError("n values must be positive")
        if self.scheme not in ("poisson", "equispaced"):
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        if self.sim_method not in ("exact", "euler"):
            raise ConfigError(f"unknown sim_method {self.sim_method!r}")
        if (self.bayes_box_lo is None) != (self.bayes_box_hi is None):
            raise ConfigError("bayes_box_lo and bayes_box_hi must be given together")

    @property
    def box(self) -> np.ndarray:
        return np.stack([self.box_lo, self.box_hi], axis=1)

    @property
    def bayes_box(self) -> np.ndarray:
        if self.bayes_box_lo is None:
            return self.box
        return np.stack([self.bayes_box_lo, self.bayes_box_hi], axis=1)

    @property
    def start(self) -> tuple[float, ...]:
        return self.sigma_star if self.sigma0 is None else self.sigma0


_PARSERS = {
    "sigma_star": _parse_floats,
    "box_lo": _parse_floats,
    "box_hi": _parse_floats,
    "sigma0": _parse_floats,
    "horizon": float,
    "scheme": str,
    "lambda1": float,
    "lambda2": float,
    "n_values": _parse_ints,
    "replications": int,
    "seed": int,
    "qmle": _parse_bool,
    "hy": _parse_bool,
    "bayes": _parse_bool,
    "bayes_nodes": int,
    "bayes_box_lo": _parse_floats,
    "bayes_box_hi": _parse_floats,
    "drift": _parse_floats,
    "sim_method": str,
    "fine_steps": int,
    "coeff_bn": float,
    "coeff_reps": int,
    "coeff_order": int,
    "workers": int,
    "out": str,
    "dump": str,
}


def parse_assignments(pairs: dict[str, str]) -> dict:
    """Parse raw string values by key; unknown keys are named in the error."""
    out = {}
    for key, raw in pairs.items():
        if key not in _PARSERS:
            known = ", ".join(sorted(_PARSERS))
            raise ConfigError(f"unknown config key {key!r} (known keys: {known})")
        try:
            out[key] = _PARSERS[key](raw)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}") from exc
    return out


def load_config(path: str | None, overrides: dict[str, str] | None = None) -> ExperimentConfig:
    """Read a config file (optional) and apply overrides, in that order."""
    pairs: dict[str, str] = {}
    if path:
        with open(path) as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
                key, _, value = line.partition("=")
                pairs[key.strip()] = value.strip()
    if overrides:
        pairs.update(overrides)
    return ExperimentConfig(**parse_assignments(pairs))


def config_field_names() -> tuple[str, ...]:
    return tuple(f.name for f in fields(ExperimentConfig))
