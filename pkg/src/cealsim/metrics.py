"""Regret and communication accounting, trace artifacts, and scaling fits.

A RunTrace is the common output schema of both algorithms: cumulative
per-timestep regret (summed over clients), per-sub-epoch and per-epoch
records with exact bit counts, and protocol-event counters.  Fits validate
the scaling claims as least-squares regressions with R^2 thresholds, since
no absolute constants are available.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

SCHEMA_VERSION = "1"

__all__ = [
    "SCHEMA_VERSION",
    "SubEpochRecord",
    "EpochRecord",
    "RunTrace",
    "FitReport",
    "ScalingFit",
    "linear_fit",
    "regret_scaling_fit",
    "bits_scaling_fit",
    "regret_from_epochs",
    "recount_bits",
    "write_run_csv",
    "run_summary",
    "write_json",
]


@dataclass(frozen=True)
class SubEpochRecord:
    """One pass of the inner loop: s_j samples per client at a fixed iterate,
    one uplink message per client, and a broadcast iff the test passed."""

    k: int
    j: int
    samples: int
    uplink_bits: tuple[int, ...]
    downlink_bits: int
    updated: bool
    gap: float
    grad_norm: float
    uplink_precision: float = 0.0
    uplink_radius: float = 0.0
    downlink_precision: float = 0.0
    downlink_radius: float = 0.0

    @property
    def message_sent(self) -> bool:
        return len(self.uplink_bits) > 0


@dataclass(frozen=True)
class EpochRecord:
    """All sub-epochs sharing one iterate x^(k); complete iff the epoch
    ended with an iterate update (t_k = sum of s_j over j_set then)."""

    k: int
    j_set: tuple[int, ...]
    t_k: int
    uplink_bits: int
    downlink_bits: int
    grad_norm_true: float
    gap_true: float
    complete: bool


@dataclass
class RunTrace:
    algo: str
    clients: int
    horizon: int
    dim: int
    sigma: float
    seed: int
    per_step_regret: np.ndarray
    epochs: list[EpochRecord]
    subepochs: list[SubEpochRecord]
    uplink_bits_total: int
    downlink_bits_total: int
    num_rounds: int
    protocol_events: dict[str, int]
    channel_uplink_bits: int
    channel_downlink_bits: int
    final_iterate: np.ndarray
    final_gap: float
    final_grad_norm: float

    @property
    def final_regret(self) -> float:
        return float(self.per_step_regret[-1]) if len(self.per_step_regret) else 0.0

    @property
    def uplink_bits_per_client(self) -> float:
        return self.uplink_bits_total / self.clients


def regret_from_epochs(trace: RunTrace) -> float:
    """Epoch-wise regret decomposition sum_k M * t_k * gap_k, including the
    trailing incomplete epoch; equals the timestep-wise total exactly."""
    return float(sum(trace.clients * e.t_k * e.gap_true for e in trace.epochs))


def recount_bits(trace: RunTrace) -> tuple[int, int]:
    """Re-derive bit totals from sub-epoch records (cross-check against the
    channel-boundary counters)."""
    up = sum(sum(r.uplink_bits) for r in trace.subepochs)
    down = sum(r.downlink_bits for r in trace.subepochs)
    return up, down


# ---------------------------------------------------------------------------
# Artifacts


def write_run_csv(trace: RunTrace, path: str | Path) -> None:
    """Per-timestep CSV: t, cumulative_regret, bits_up, bits_down, k, j.

    Bit counters are cumulative and land on the final timestep of the
    sub-epoch whose messages they carry.  Floats are written via repr for
    byte-exact reproducibility.
    """
    path = Path(path)
    regret = trace.per_step_regret
    with path.open("w", newline="") as fh:
        fh.write("t,cumulative_regret,bits_up,bits_down,k,j\n")
        t = 0
        bits_up = 0
        bits_down = 0
        for rec in trace.subepochs:
            for i in range(rec.samples):
                t += 1
                if i == rec.samples - 1:
                    bits_up += sum(rec.uplink_bits)
                    bits_down += rec.downlink_bits
                fh.write(
                    f"{t},{float(regret[t - 1])!r},{bits_up},{bits_down},{rec.k},{rec.j}\n"
                )


def run_summary(trace: RunTrace) -> dict:
    """JSON-ready scalar summary of one run."""
    return {
        "schema_version": SCHEMA_VERSION,
        "algo": trace.algo,
        "clients": trace.clients,
        "horizon": trace.horizon,
        "dim": trace.dim,
        "sigma": trace.sigma,
        "seed": trace.seed,
        "final_regret": trace.final_regret,
        "uplink_bits_total": int(trace.uplink_bits_total),
        "downlink_bits_total": int(trace.downlink_bits_total),
        "uplink_bits_per_client": trace.uplink_bits_per_client,
        "num_rounds": int(trace.num_rounds),
        "num_subepochs": len(trace.subepochs),
        "samples_per_client": int(sum(r.samples for r in trace.subepochs)),
        "final_gap": trace.final_gap,
        "final_grad_norm": trace.final_grad_norm,
        "protocol_events": dict(trace.protocol_events),
    }


def write_json(obj: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")


# ---------------------------------------------------------------------------
# Scaling fits


@dataclass(frozen=True)
class FitReport:
    model: str
    slope: float
    intercept: float
    r_squared: float
    n_points: int

    def as_dict(self) -> dict:
        return {
            "model": self.model,
            "slope": self.slope,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "n_points": self.n_points,
        }


@dataclass(frozen=True)
class ScalingFit:
    fit: FitReport
    ratios: dict
    max_ratio: float
    ratio_spread: float

    def as_dict(self) -> dict:
        return {
            **self.fit.as_dict(),
            "max_ratio": self.max_ratio,
            "ratio_spread": self.ratio_spread,
            "ratios": {str(k): v for k, v in self.ratios.items()},
        }


def linear_fit(x: Sequence[float], y: Sequence[float], model: str = "linear") -> FitReport:
    """Ordinary least squares y ~ slope*x + intercept with R^2."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or len(x) < 2:
        raise ValueError("need two equal-length 1-D samples with >= 2 points")
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_res = float(np.dot(resid, resid))
    centered = y - y.mean()
    ss_tot = float(np.dot(centered, centered))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return FitReport(model, float(slope), float(intercept), r2, len(x))


def _cell_regressor(key: tuple, model: str) -> float:
    if model == "log(MT)":
        m, t = key[0], key[1]
        return math.log(m * t)
    if model == "linear(T)":
        return float(key[1])
    if model == "d*log(MT)":
        m, t, d = key
        return d * math.log(m * t)
    raise ValueError(f"unknown model {model!r}")


def _scaling_fit(
    cells: Mapping[tuple, Sequence[float]],
    model: str,
    min_cells: int,
    min_seeds: int,
) -> ScalingFit:
    if len(cells) < min_cells:
        raise ValueError(f"need at least {min_cells} distinct grid points, got {len(cells)}")
    for key, values in cells.items():
        if len(values) < min_seeds:
            raise ValueError(f"grid point {key} has {len(values)} seeds, need >= {min_seeds}")
    keys = sorted(cells)
    xs = [_cell_regressor(k, model) for k in keys]
    ys = [float(np.mean(cells[k])) for k in keys]
    fit = linear_fit(xs, ys, model=model)
    ratios = {k: y / x for k, x, y in zip(keys, xs, ys)}
    vals = list(ratios.values())
    max_ratio = max(vals)
    positive = [v for v in vals if v > 0]
    spread = (max(positive) / min(positive)) if len(positive) == len(vals) and positive else math.inf
    return ScalingFit(fit=fit, ratios=ratios, max_ratio=max_ratio, ratio_spread=spread)


def regret_scaling_fit(
    cells: Mapping[tuple[int, int], Sequence[float]],
    model: str = "log(MT)",
) -> ScalingFit:
    """Fit mean final regret per (M, T) cell against the model regressor.

    Requires >= 3 distinct (M, T) points with >= 10 seeds each.
    """
    return _scaling_fit(cells, model, min_cells=3, min_seeds=10)


def bits_scaling_fit(
    cells: Mapping[tuple[int, int, int], Sequence[float]],
    model: str = "d*log(MT)",
) -> ScalingFit:
    """Fit mean bit totals per (M, T, d) cell; apply separately to uplink
    and downlink totals."""
    return _scaling_fit(cells, model, min_cells=3, min_seeds=10)
