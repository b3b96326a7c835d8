"""JSON config parsing and validation for runs and sweeps.

The schema is documented in the README.  Schema errors (missing/unknown
keys, wrong types) raise ConfigError; range violations surface as
ValueError from the constructors they reach.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .baselines import MinibatchConfig
from .ceal import CealConfig
from .objective import ProblemInstance, make_instance

__all__ = [
    "ConfigError",
    "RunSetup",
    "SweepSpec",
    "load_json",
    "parse_run_config",
    "parse_sweep_spec",
    "build_instance",
]

SCHEMA_VERSION = "1"

PROBLEM_DEFAULTS = {
    "curvature": "linspace",
    "minimizer": "center",
    "minimizer_scale": 0.25,
    "grad_cap": 0.5,
    "domain_radius": None,
    "noise": "gaussian",
}
PROBLEM_REQUIRED = ("dim", "alpha", "beta", "sigma", "clients", "horizon")

CEAL_DEFAULTS = {
    "eta": None,
    "delta": 0.05,
    "gamma0": 0.5,
    "phi0": 0.5,
    "capacity": None,
    "float_bits": 64,
    "x_init": None,
}
MINIBATCH_DEFAULTS = {
    "batch_size": 100,
    "step_size": None,
    "float_bits": 64,
    "x_init": None,
}


class ConfigError(ValueError):
    """Schema-level problem: missing/unknown keys or wrong value types."""


def load_json(path: str | Path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    try:
        obj = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return obj


def _check_keys(d: dict, allowed: set[str], required: tuple[str, ...], where: str) -> None:
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    missing = [k for k in required if k not in d]
    if missing:
        raise ConfigError(f"{where}: missing required keys {missing}")


def _merged(d: dict, defaults: dict) -> dict:
    out = dict(defaults)
    out.update(d)
    return out


def build_instance(problem: dict) -> ProblemInstance:
    """Instantiate the problem description from its config section."""
    _check_keys(
        problem,
        set(PROBLEM_REQUIRED) | set(PROBLEM_DEFAULTS),
        PROBLEM_REQUIRED,
        "problem",
    )
    p = _merged(problem, PROBLEM_DEFAULTS)
    for key in ("dim", "clients", "horizon"):
        if not isinstance(p[key], int):
            raise ConfigError(f"problem.{key} must be an integer, got {p[key]!r}")
    return make_instance(
        dim=p["dim"],
        alpha=float(p["alpha"]),
        beta=float(p["beta"]),
        sigma=float(p["sigma"]),
        clients=p["clients"],
        horizon=p["horizon"],
        curvature=p["curvature"],
        minimizer=p["minimizer"],
        minimizer_scale=float(p["minimizer_scale"]),
        grad_cap=float(p["grad_cap"]),
        domain_radius=p["domain_radius"],
        noise=p["noise"],
    )


def build_ceal_config(section: dict) -> CealConfig:
    _check_keys(section, set(CEAL_DEFAULTS), (), "ceal")
    c = _merged(section, CEAL_DEFAULTS)
    x_init = None if c["x_init"] is None else np.asarray(c["x_init"], dtype=float)
    return CealConfig(
        eta=None if c["eta"] is None else float(c["eta"]),
        delta=float(c["delta"]),
        gamma0=float(c["gamma0"]),
        phi0=float(c["phi0"]),
        capacity=c["capacity"],
        float_bits=int(c["float_bits"]),
        x_init=x_init,
    )


def build_minibatch_config(section: dict) -> MinibatchConfig:
    _check_keys(section, set(MINIBATCH_DEFAULTS), (), "minibatch")
    c = _merged(section, MINIBATCH_DEFAULTS)
    if c["step_size"] is None:
        raise ConfigError("minibatch.step_size is required for minibatch runs")
    x_init = None if c["x_init"] is None else np.asarray(c["x_init"], dtype=float)
    return MinibatchConfig(
        batch_size=int(c["batch_size"]),
        step_size=float(c["step_size"]),
        float_bits=int(c["float_bits"]),
        x_init=x_init,
    )


@dataclass
class RunSetup:
    instance: ProblemInstance
    algo: str
    ceal_config: CealConfig | None
    minibatch_config: MinibatchConfig | None
    seed: int
    raw: dict


def parse_run_config(cfg: dict) -> RunSetup:
    """Validate a single-run config object and build its pieces."""
    _check_keys(
        cfg,
        {"schema_version", "algo", "problem", "ceal", "minibatch", "seed"},
        ("algo", "problem"),
        "config",
    )
    algo = cfg["algo"]
    if algo not in ("ceal", "minibatch"):
        raise ConfigError(f"algo must be 'ceal' or 'minibatch', got {algo!r}")
    instance = build_instance(cfg["problem"])
    seed = cfg.get("seed", 0)
    if not isinstance(seed, int):
        raise ConfigError(f"seed must be an integer, got {seed!r}")
    ceal_config = build_ceal_config(cfg.get("ceal", {})) if algo == "ceal" else None
    mb_config = build_minibatch_config(cfg.get("minibatch", {})) if algo == "minibatch" else None
    if ceal_config is not None:
        # Resolve and range-check eta now so bad configs fail before running.
        from .ceal import default_eta, validate_eta

        validate_eta(
            ceal_config.eta if ceal_config.eta is not None else default_eta(instance.beta),
            instance.beta,
        )
    return RunSetup(
        instance=instance,
        algo=algo,
        ceal_config=ceal_config,
        minibatch_config=mb_config,
        seed=seed,
        raw=cfg,
    )


@dataclass
class SweepSpec:
    algos: list[str]
    grid: dict[str, list]
    seeds_count: int
    seeds_base: int
    problem: dict
    overrides: dict = field(default_factory=dict)
    output_dir: str | None = None

    def cells(self) -> list[dict]:
        """Cross product of the grid axes as per-cell problem dicts."""
        axes = {
            "clients": self.grid.get("clients", [self.problem["clients"]]),
            "horizon": self.grid.get("horizon", [self.problem["horizon"]]),
            "dim": self.grid.get("dim", [self.problem["dim"]]),
            "sigma": self.grid.get("sigma", [self.problem["sigma"]]),
        }
        out = []
        for m, t, d, sig in itertools.product(
            axes["clients"], axes["horizon"], axes["dim"], axes["sigma"]
        ):
            cell = dict(self.problem)
            cell.update({"clients": m, "horizon": t, "dim": d, "sigma": sig})
            out.append(cell)
        return out


def parse_sweep_spec(cfg: dict) -> SweepSpec:
    _check_keys(
        cfg,
        {"schema_version", "algo", "grid", "seeds", "problem", "overrides", "output_dir"},
        ("algo", "grid", "problem"),
        "sweep",
    )
    algo = cfg["algo"]
    if algo not in ("ceal", "minibatch", "both"):
        raise ConfigError(f"sweep algo must be 'ceal', 'minibatch' or 'both', got {algo!r}")
    algos = ["ceal", "minibatch"] if algo == "both" else [algo]

    grid = cfg["grid"]
    if not isinstance(grid, dict) or not grid:
        raise ConfigError("sweep.grid must be a non-empty object of axis lists")
    _check_keys(grid, {"clients", "horizon", "dim", "sigma"}, (), "sweep.grid")
    for axis, values in grid.items():
        if not isinstance(values, list) or not values:
            raise ConfigError(f"sweep.grid.{axis} must be a non-empty list")

    seeds = cfg.get("seeds", {})
    _check_keys(seeds, {"count", "base"}, (), "sweep.seeds")
    count = seeds.get("count", 1)
    base = seeds.get("base", 0)
    if not isinstance(count, int) or count < 1:
        raise ConfigError(f"sweep.seeds.count must be a positive integer, got {count!r}")
    if not isinstance(base, int):
        raise ConfigError(f"sweep.seeds.base must be an integer, got {base!r}")

    problem = dict(cfg["problem"])
    # Swept axes may be omitted from the base problem; fill placeholders so
    # validation of the non-swept fields can proceed per cell.
    for axis in ("clients", "horizon", "dim", "sigma"):
        if axis in grid:
            problem.setdefault(axis, grid[axis][0])
    missing = [k for k in PROBLEM_REQUIRED if k not in problem]
    if missing:
        raise ConfigError(f"sweep.problem: missing required keys {missing}")

    overrides = cfg.get("overrides", {})
    _check_keys(overrides, {"ceal", "minibatch"}, (), "sweep.overrides")

    return SweepSpec(
        algos=algos,
        grid=grid,
        seeds_count=count,
        seeds_base=base,
        problem=problem,
        overrides=overrides,
        output_dir=cfg.get("output_dir"),
    )
