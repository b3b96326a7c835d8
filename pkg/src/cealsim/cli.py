"""Command-line front end: single runs, sweeps, and the acceptance suite.

Subcommands:
    run     execute one configured run, write trace.csv + summary.json
    sweep   run a grid x seeds sweep with resume support, write per-run
            CSVs, aggregate JSON/CSV summaries, and report figures
    accept  run the acceptance suite and write its report artifacts

Exit codes: 0 success, 1 acceptance failure, 2 missing file, 3 schema
error, 4 parameter-range error.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .baselines import match_step_size, run_minibatch
from .ceal import run_ceal
from .config import (
    ConfigError,
    SweepSpec,
    build_ceal_config,
    build_instance,
    build_minibatch_config,
    load_json,
    parse_run_config,
    parse_sweep_spec,
)
from .metrics import SCHEMA_VERSION, run_summary, write_json, write_run_csv

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_MISSING = 2
EXIT_SCHEMA = 3
EXIT_RANGE = 4


def run_id(algo: str, problem: dict, seed: int) -> str:
    return (
        f"{algo}_M{problem['clients']}_T{problem['horizon']}"
        f"_d{problem['dim']}_sig{problem['sigma']:g}_seed{seed}"
    )


def _execute_run(payload: dict) -> dict:
    """Run one configured job; used directly and by sweep worker processes."""
    instance = build_instance(payload["problem"])
    algo = payload["algo"]
    seed = payload["seed"]
    if algo == "ceal":
        trace = run_ceal(instance, build_ceal_config(payload.get("ceal", {})), seed=seed)
    else:
        trace = run_minibatch(instance, build_minibatch_config(payload.get("minibatch", {})), seed=seed)
    summary = run_summary(trace)
    summary["run_id"] = payload.get("run_id", run_id(algo, payload["problem"], seed))
    if payload.get("csv_path"):
        write_run_csv(trace, payload["csv_path"])
    return summary


def cmd_run(args) -> int:
    cfg = load_json(args.config)
    setup = parse_run_config(cfg)
    seed = args.seed if args.seed is not None else setup.seed
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    payload = {
        "problem": dict(cfg["problem"]),
        "algo": setup.algo,
        "ceal": cfg.get("ceal", {}),
        "minibatch": cfg.get("minibatch", {}),
        "seed": seed,
        "csv_path": str(out / "trace.csv"),
    }
    summary = _execute_run(payload)
    summary["config"] = cfg
    write_json(summary, out / "summary.json")
    print(
        f"{summary['run_id']}: regret={summary['final_regret']:.6g} "
        f"rounds={summary['num_rounds']} bits_up={summary['uplink_bits_total']} "
        f"bits_down={summary['downlink_bits_total']} -> {out}"
    )
    return EXIT_OK


def _aggregate_cells(summaries: list[dict]) -> list[dict]:
    groups: dict = {}
    for s in summaries:
        key = (s["algo"], s["clients"], s["horizon"], s["dim"], s["sigma"])
        groups.setdefault(key, []).append(s)
    rows = []
    for (algo, m, t, d, sig), members in sorted(groups.items()):
        rows.append({
            "algo": algo,
            "clients": m,
            "horizon": t,
            "dim": d,
            "sigma": sig,
            "seeds": len(members),
            "mean_final_regret": float(np.mean([x["final_regret"] for x in members])),
            "mean_rounds": float(np.mean([x["num_rounds"] for x in members])),
            "mean_uplink_bits": float(np.mean([x["uplink_bits_total"] for x in members])),
            "mean_uplink_bits_per_client": float(
                np.mean([x["uplink_bits_per_client"] for x in members])
            ),
            "mean_downlink_bits": float(np.mean([x["downlink_bits_total"] for x in members])),
        })
    return rows


def _sweep_fits(summaries: list[dict]) -> dict:
    """Scaling fits per algorithm, where the grid qualifies."""
    from .metrics import bits_scaling_fit, regret_scaling_fit

    fits: dict = {}
    for algo in sorted({s["algo"] for s in summaries}):
        sub = [s for s in summaries if s["algo"] == algo]
        cells_regret: dict = {}
        cells_up: dict = {}
        cells_down: dict = {}
        cells_rounds: dict = {}
        for s in sub:
            mt = (s["clients"], s["horizon"])
            mtd = (s["clients"], s["horizon"], s["dim"])
            cells_regret.setdefault(mt, []).append(s["final_regret"])
            cells_rounds.setdefault(mt, []).append(s["num_rounds"])
            cells_up.setdefault(mtd, []).append(s["uplink_bits_per_client"])
            cells_down.setdefault(mtd, []).append(s["downlink_bits_total"])
        try:
            fits[algo] = {
                "regret_logMT": regret_scaling_fit(cells_regret).as_dict(),
                "rounds_logMT": regret_scaling_fit(cells_rounds).as_dict(),
                "uplink_per_client": bits_scaling_fit(cells_up).as_dict(),
                "downlink": bits_scaling_fit(cells_down).as_dict(),
            }
        except ValueError as exc:
            fits[algo] = {"skipped": str(exc)}
    return fits


def _matched_comparison(spec: SweepSpec, rows: list[dict]) -> list[dict]:
    """Per-cell bit comparison at matched final regret (both-algo sweeps)."""
    ceal_rows = {(r["clients"], r["horizon"], r["dim"], r["sigma"]): r
                 for r in rows if r["algo"] == "ceal"}
    mb_overrides = spec.overrides.get("minibatch", {})
    batch = mb_overrides.get("batch_size", 100)
    float_bits = mb_overrides.get("float_bits", 64)
    table = []
    for cell in spec.cells():
        key = (cell["clients"], cell["horizon"], cell["dim"], cell["sigma"])
        row = ceal_rows.get(key)
        if row is None:
            continue
        instance = build_instance(cell)
        target = row["mean_final_regret"]
        entry = {
            "clients": cell["clients"], "horizon": cell["horizon"],
            "dim": cell["dim"], "sigma": cell["sigma"],
            "target_regret": target,
            "ceal_total_bits": row["mean_uplink_bits"] + row["mean_downlink_bits"],
            "batch_size": batch,
        }
        try:
            cfg, trace = match_step_size(
                instance, batch, target, seed=spec.seeds_base, float_bits=float_bits
            )
            entry.update({
                "matched": True,
                "minibatch_step_size": cfg.step_size,
                "minibatch_regret": trace.final_regret,
                "minibatch_total_bits": trace.uplink_bits_total + trace.downlink_bits_total,
            })
            entry["ceal_bits_lower"] = entry["ceal_total_bits"] < entry["minibatch_total_bits"]
        except ValueError as exc:
            entry.update({"matched": False, "reason": str(exc)})
        table.append(entry)
    return table


def cmd_sweep(args) -> int:
    cfg = load_json(args.config)
    spec = parse_sweep_spec(cfg)
    out = Path(args.out or spec.output_dir or "sweep_out")
    out.mkdir(parents=True, exist_ok=True)
    manifest_path = out / "manifest.json"
    manifest = {"schema_version": SCHEMA_VERSION, "completed": {}}
    if manifest_path.is_file():
        manifest = json.loads(manifest_path.read_text())

    payloads = []
    summaries = []
    for cell in spec.cells():
        for algo in spec.algos:
            for i in range(spec.seeds_count):
                seed = spec.seeds_base + i
                rid = run_id(algo, cell, seed)
                csv_path = out / f"{rid}.csv"
                if rid in manifest["completed"] and csv_path.is_file():
                    summaries.append(manifest["completed"][rid])
                    continue
                payloads.append({
                    "problem": cell,
                    "algo": algo,
                    "ceal": spec.overrides.get("ceal", {}),
                    "minibatch": spec.overrides.get("minibatch", {}),
                    "seed": seed,
                    "run_id": rid,
                    "csv_path": str(csv_path),
                })

    # Validate one payload per algo up front so schema errors surface
    # before any worker starts.
    for algo in spec.algos:
        sample = next((p for p in payloads if p["algo"] == algo), None)
        if sample is not None:
            build_instance(sample["problem"])
            if algo == "ceal":
                build_ceal_config(sample["ceal"])
            else:
                build_minibatch_config(sample["minibatch"])

    if args.workers > 1 and payloads:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            for summary in pool.map(_execute_run, payloads):
                summaries.append(summary)
                manifest["completed"][summary["run_id"]] = summary
                manifest_path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    else:
        for payload in payloads:
            summary = _execute_run(payload)
            summaries.append(summary)
            manifest["completed"][summary["run_id"]] = summary
            manifest_path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")

    rows = _aggregate_cells(summaries)
    result = {
        "schema_version": SCHEMA_VERSION,
        "algos": spec.algos,
        "grid": spec.grid,
        "seeds": {"count": spec.seeds_count, "base": spec.seeds_base},
        "cells": rows,
        "fits": _sweep_fits(summaries),
    }
    if len(spec.algos) > 1:
        result["matched_regret_comparison"] = _matched_comparison(spec, rows)
    write_json(result, out / "sweep_summary.json")

    if rows:
        cols = list(rows[0].keys())
        with (out / "sweep_summary.csv").open("w") as fh:
            fh.write(",".join(cols) + "\n")
            for row in rows:
                fh.write(",".join(
                    repr(row[c]) if isinstance(row[c], float) else str(row[c]) for c in cols
                ) + "\n")

    from .figures import render_sweep_figures

    figures = render_sweep_figures(rows, out)
    print(f"sweep complete: {len(summaries)} runs, {len(rows)} cells, "
          f"{len(figures)} figures -> {out}")
    return EXIT_OK


def cmd_accept(args) -> int:
    from .acceptance import run_acceptance

    results = run_acceptance(out_dir=args.out, verbose=True)
    failed = [r.cid for r in results if not r.passed]
    if failed:
        print(f"acceptance: {len(failed)} criteria failed: {failed}")
        return EXIT_FAIL
    print("acceptance: all criteria passed")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cealsim",
        description="Communication-efficient distributed online optimization simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a single configured run")
    p_run.add_argument("--config", required=True, help="path to the run config JSON")
    p_run.add_argument("--out", default="run_out", help="output directory")
    p_run.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a grid x seeds sweep")
    p_sweep.add_argument("--config", required=True, help="path to the sweep spec JSON")
    p_sweep.add_argument("--out", default=None, help="output directory")
    p_sweep.add_argument("--workers", type=int, default=1, help="parallel run workers")
    p_sweep.set_defaults(func=cmd_sweep)

    p_acc = sub.add_parser("accept", help="run the acceptance suite")
    p_acc.add_argument("--out", default="acceptance_out", help="report output directory")
    p_acc.set_defaults(func=cmd_accept)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except ValueError as exc:
        print(f"invalid parameter: {exc}", file=sys.stderr)
        return EXIT_RANGE


if __name__ == "__main__":
    sys.exit(main())
