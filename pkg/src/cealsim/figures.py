"""Figure rendering for sweep and acceptance reports.

Renders matplotlib figures to files next to the CSV/JSON artifacts; the
metrics module stays plot-free and all figures are derived from the same
aggregated rows that feed the delimited output.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

__all__ = ["render_sweep_figures"]

_ALGO_STYLE = {"ceal": ("tab:blue", "o"), "minibatch": ("tab:orange", "s")}


def _style(algo: str):
    return _ALGO_STYLE.get(algo, ("tab:gray", "x"))


def _scatter_vs_logmt(ax, rows, ykey, ylabel):
    for algo in sorted({r["algo"] for r in rows}):
        sub = [r for r in rows if r["algo"] == algo]
        xs = [math.log(r["clients"] * r["horizon"]) for r in sub]
        ys = [r[ykey] for r in sub]
        color, marker = _style(algo)
        ax.scatter(xs, ys, color=color, marker=marker, label=algo)
        if len(set(xs)) >= 2:
            import numpy as np

            slope, intercept = np.polyfit(xs, ys, 1)
            grid = np.linspace(min(xs), max(xs), 50)
            ax.plot(grid, slope * grid + intercept, color=color, alpha=0.5, lw=1)
    ax.set_xlabel("log(M T)")
    ax.set_ylabel(ylabel)
    ax.legend()


def render_sweep_figures(rows: list[dict], outdir: str | Path) -> list[str]:
    """Render the standard report figures from per-cell aggregate rows.

    Each row carries: algo, clients, horizon, dim, sigma, mean_final_regret,
    mean_rounds, mean_uplink_bits, mean_downlink_bits,
    mean_uplink_bits_per_client.  Returns the written file paths.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written: list[str] = []
    if not rows:
        return written

    def save(fig, name):
        path = outdir / name
        fig.tight_layout()
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(str(path))

    fig, ax = plt.subplots(figsize=(5.5, 4))
    _scatter_vs_logmt(ax, rows, "mean_final_regret", "mean final regret")
    ax.set_title("Cumulative regret vs log(MT)")
    save(fig, "regret_vs_logmt.png")

    fig, ax = plt.subplots(figsize=(5.5, 4))
    _scatter_vs_logmt(ax, rows, "mean_rounds", "mean communication rounds")
    ax.set_title("Rounds vs log(MT)")
    save(fig, "rounds_vs_logmt.png")

    fig, ax = plt.subplots(figsize=(5.5, 4))
    _scatter_vs_logmt(ax, rows, "mean_uplink_bits_per_client", "bits")
    for algo in sorted({r["algo"] for r in rows}):
        sub = [r for r in rows if r["algo"] == algo]
        xs = [math.log(r["clients"] * r["horizon"]) for r in sub]
        ys = [r["mean_downlink_bits"] for r in sub]
        color, _ = _style(algo)
        ax.scatter(xs, ys, color=color, marker="v", label=f"{algo} downlink")
    ax.set_yscale("log")
    ax.set_title("Per-client uplink and downlink bits vs log(MT)")
    ax.legend()
    save(fig, "bits_vs_logmt.png")

    dims = sorted({r["dim"] for r in rows})
    if len(dims) >= 2:
        fig, ax = plt.subplots(figsize=(5.5, 4))
        for algo in sorted({r["algo"] for r in rows}):
            sub = sorted((r for r in rows if r["algo"] == algo), key=lambda r: r["dim"])
            color, marker = _style(algo)
            ax.plot(
                [r["dim"] for r in sub],
                [r["mean_uplink_bits_per_client"] for r in sub],
                color=color, marker=marker, label=algo,
            )
        ax.set_xlabel("dimension d")
        ax.set_ylabel("per-client uplink bits")
        ax.set_title("Uplink cost vs dimension")
        ax.legend()
        save(fig, "bits_vs_dim.png")

    algos = {r["algo"] for r in rows}
    if len(algos) >= 2:
        fig, ax = plt.subplots(figsize=(5.5, 4))
        for algo in sorted(algos):
            sub = [r for r in rows if r["algo"] == algo]
            color, marker = _style(algo)
            ax.scatter(
                [r["mean_final_regret"] for r in sub],
                [r["mean_uplink_bits"] + r["mean_downlink_bits"] for r in sub],
                color=color, marker=marker, label=algo,
            )
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel("mean final regret")
        ax.set_ylabel("mean total bits")
        ax.set_title("Regret / communication trade-off")
        ax.legend()
        save(fig, "regret_vs_bits.png")

    return written
