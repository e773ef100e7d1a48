"""Command-line driver: run, sweep, divisibility, oracle-check and fit.

Every command is driven by a JSON experiment config (see
:mod:`qubitbath.config`).  Outputs are plot-ready UTF-8 CSV files plus JSON
metadata sidecars; reruns of the same config produce byte-identical CSV
bodies (timestamps only ever appear in the JSON metadata).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import itertools
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .analysis import (
    EXP_DECAY_SHIFT,
    RECIPROCAL_EXP,
    detect_revival,
    detect_saturation,
    fit_exp_decay_shift,
    fit_reciprocal_exp,
    vanishing_crossing,
)
from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .entanglement import parse_cut_label
from .dynamics import evolve, oracle_deviation
from .errors import IntegrationError, QuadratureError
from .rates import classify_divisibility
from .states import density_from_pure

USAGE_EXIT = 2
FAILURE_EXIT = 1


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _ensure_dir(path: str) -> None:
    os.makedirs(path, exist_ok=True)


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")


def _metadata(config: ExperimentConfig, extra: dict) -> dict:
    return {
        "config": config.to_dict(),
        "package_version": __version__,
        "generated_at": datetime.now(timezone.utc).isoformat(),
        **extra,
    }


def _apply_kappa(config: ExperimentConfig, kappa) -> ExperimentConfig:
    if kappa is None:
        return config
    noise = dataclasses.replace(config.noise, kappa=float(kappa))
    return dataclasses.replace(config, noise=noise)


def _write_trajectory_csv(path: str, trajectory) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["t", "bipartition_label", "log_negativity"])
        for label, series in trajectory.observables.items():
            for t, value in zip(trajectory.times, series):
                writer.writerow([_fmt(float(t)), label, _fmt(float(value))])


def _trajectory_analysis(trajectory, analysis_cfg) -> dict:
    report = {}
    times = trajectory.times
    for label, series in trajectory.observables.items():
        entry = {}
        span = float(times[-1] - times[0]) if len(times) else 0.0
        if span >= 2 * analysis_cfg.saturation_window and len(times) >= 8:
            sat = detect_saturation(
                times,
                series,
                window=analysis_cfg.saturation_window,
                tol=analysis_cfg.saturation_tol,
            )
            entry["saturation"] = {
                "saturated": sat.saturated,
                "value": sat.value,
                "window": list(sat.window),
                "slope_bound": sat.slope_bound,
            }
        revivals = detect_revival(times, series, threshold=analysis_cfg.revival_threshold)
        entry["revivals"] = {
            "threshold": revivals.threshold,
            "events": [
                {
                    "t_collapse": ev.t_collapse,
                    "t_revival": ev.t_revival,
                    "peak_value": ev.peak_value,
                }
                for ev in revivals.events
            ],
        }
        report[label] = entry
    return report


def run_experiment(config: ExperimentConfig, out_dir: str) -> dict:
    """Execute one trajectory and write csv/json artifacts; returns paths."""
    _ensure_dir(out_dir)
    psi = config.state.build()
    rho0 = density_from_pure(psi)
    trajectory = evolve(
        rho0,
        config.noise,
        config.time.t_max,
        cuts=config.bipartitions(),
        options=config.time.integrator_options(),
    )
    paths = {}
    if "csv" in config.output_formats:
        paths["trajectory"] = os.path.join(out_dir, "trajectory.csv")
        _write_trajectory_csv(paths["trajectory"], trajectory)
    if "json" in config.output_formats:
        paths["metadata"] = os.path.join(out_dir, "metadata.json")
        _write_json(paths["metadata"], _metadata(config, {"trajectory": trajectory.metadata}))
        paths["analysis"] = os.path.join(out_dir, "analysis.json")
        _write_json(
            paths["analysis"], _trajectory_analysis(trajectory, config.analysis)
        )
    if "states" in config.output_formats:
        paths["states"] = os.path.join(out_dir, "states.json")
        dump = [
            {"t": float(t), "state": json.loads(state.to_json())}
            for t, state in zip(trajectory.state_times, trajectory.states)
        ]
        _write_json(paths["states"], {"states": dump})
    return paths


def _estimate_cell_bytes(n: int) -> float:
    # dense complex matrix plus RK4 stages, Hamming table and scratch copies
    return 12.0 * 16.0 * (4.0**n)


def _derive_cell(config: ExperimentConfig, cell: dict) -> ExperimentConfig:
    payload = config.to_dict()
    payload.pop("sweep", None)
    if "n" in cell:
        payload["state"]["n"] = int(cell["n"])
    if "s" in cell:
        if "s" not in payload["noise"]["rate_z"]:
            raise ConfigError("sweep.axes.s: noise.rate_z has no Ohmicity parameter")
        payload["noise"]["rate_z"]["s"] = float(cell["s"])
    if "kappa" in cell:
        payload["noise"]["kappa"] = float(cell["kappa"])
    snapshot = config.sweep.snapshot_t
    payload["time"] = {
        "t_max": snapshot,
        "step": config.time.step,
        "sample_every": snapshot,
        "observable_every": snapshot,
    }
    return parse_config(payload)


def _run_sweep_cell(args: tuple) -> tuple:
    cell, payload = args
    try:
        config = parse_config(payload)
        psi = config.state.build()
        trajectory = evolve(
            density_from_pure(psi),
            config.noise,
            config.time.t_max,
            cuts=config.bipartitions(),
            options=config.time.integrator_options(record_states=False),
        )
        rows = []
        # key rows by the labels the config asked for: at n = 3 the
        # balanced cut canonicalises to 1-Rest, but downstream grouping
        # (e.g. odd-N fits of the balanced cut) needs the requested name
        for label in config.cuts:
            canonical = parse_cut_label(label, config.state.n).label
            series = trajectory.observables[canonical]
            rows.append(
                {
                    **cell,
                    "kappa": config.noise.kappa,
                    "cut": label,
                    "t": float(trajectory.times[-1]),
                    "log_negativity": float(series[-1]),
                }
            )
        return cell, rows, None
    except Exception as exc:  # per-cell failures must not kill the sweep
        return cell, [], f"{type(exc).__name__}: {exc}"


def sweep_experiment(config: ExperimentConfig, out_dir: str, workers=None) -> dict:
    """Run the Cartesian product of the sweep axes and aggregate snapshots."""
    if config.sweep is None:
        raise ConfigError("sweep: config has no sweep section")
    sweep = config.sweep
    axes = sweep.axes
    names = sorted(axes)
    cells = [dict(zip(names, combo)) for combo in itertools.product(*(axes[k] for k in names))]
    if len(cells) > sweep.job_cap:
        raise ConfigError(f"sweep: {len(cells)} cells exceed job_cap={sweep.job_cap}")

    workers = workers if workers is not None else sweep.workers
    if workers is None:
        workers = os.cpu_count() or 1
    workers = max(1, min(int(workers), len(cells)))

    max_n = max((int(c.get("n", config.state.n)) for c in cells), default=config.state.n)
    budget = sweep.memory_budget_mb * 1024.0 * 1024.0
    needed = _estimate_cell_bytes(max_n) * workers
    if needed > budget:
        raise ConfigError(
            f"sweep: estimated {needed / 2**20:.0f} MiB for n={max_n} with "
            f"{workers} workers exceeds memory_budget_mb={sweep.memory_budget_mb}"
        )

    jobs = [(cell, _derive_cell(config, cell).to_dict()) for cell in cells]
    results = []
    if workers == 1:
        results = [_run_sweep_cell(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_sweep_cell, jobs))

    rows = []
    failures = []
    for cell, cell_rows, error in results:
        rows.extend(cell_rows)
        if error is not None:
            failures.append({"cell": cell, "error": error})

    def sort_key(row):
        return (
            float(row.get("n", config.state.n)),
            float(row.get("s", math.inf)),
            float(row["kappa"]),
            row["cut"],
        )

    rows.sort(key=sort_key)

    _ensure_dir(out_dir)
    paths = {"summary": os.path.join(out_dir, "summary.csv")}
    columns = ["n", "s", "kappa", "cut", "t", "log_negativity"]
    with open(paths["summary"], "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row[c]) if c in row else "" for c in columns])
    if "json" in config.output_formats:
        paths["metadata"] = os.path.join(out_dir, "summary.json")
        _write_json(
            paths["metadata"],
            _metadata(config, {"cells": len(cells), "failures": failures}),
        )
    if failures:
        print(f"sweep: {len(failures)} of {len(cells)} cells failed", file=sys.stderr)
    return paths


def divisibility_report(config: ExperimentConfig) -> dict:
    n_steps = int(round(config.time.t_max / config.time.step))
    grid = np.linspace(0.0, config.time.t_max, n_steps + 1)
    verdict = classify_divisibility(
        config.noise.rate_x, config.noise.rate_y, config.noise.rate_z, grid
    )
    payload = verdict.to_dict()
    payload["grid"] = {"t_max": config.time.t_max, "step": config.time.step}
    return payload


def _read_summary(path: str) -> list:
    with open(path, "r", encoding="utf-8", newline="") as handle:
        return list(csv.DictReader(handle))


def _cmd_run(args) -> int:
    config = _apply_kappa(load_config(args.config), args.kappa)
    out_dir = args.out or config.output_directory
    paths = run_experiment(config, out_dir)
    for name, path in sorted(paths.items()):
        print(f"{name}: {path}")
    return 0


def _cmd_sweep(args) -> int:
    config = _apply_kappa(load_config(args.config), args.kappa)
    out_dir = args.out or config.output_directory
    paths = sweep_experiment(config, out_dir, workers=args.workers)
    for name, path in sorted(paths.items()):
        print(f"{name}: {path}")
    return 0


def _cmd_divisibility(args) -> int:
    config = load_config(args.config)
    payload = divisibility_report(config)
    print(f"classification: {payload['classification']}")
    print(f"min margin: {payload['min_margin']:.6g}")
    for window in payload["violation_windows"]:
        print(f"violation window: t in [{window[0]:.4f}, {window[1]:.4f}]")
    if args.out:
        _ensure_dir(args.out)
        _write_json(os.path.join(args.out, "divisibility.json"), payload)
    return 0


def _cmd_oracle_check(args) -> int:
    config = _apply_kappa(load_config(args.config), args.kappa)
    psi = config.state.build()
    options = config.time.integrator_options(
        record_states=False, dense=args.dense
    )
    deviation = oracle_deviation(
        density_from_pure(psi),
        config.noise,
        config.time.t_max,
        options=options,
        compare_every=args.compare_every,
    )
    status = "pass" if deviation <= args.threshold else "FAIL"
    print(f"max |rk4 - analytic| = {deviation:.3e} (bound {args.threshold:.1e}): {status}")
    return 0 if deviation <= args.threshold else FAILURE_EXIT


def _cmd_fit(args) -> int:
    rows = _read_summary(args.input)
    if not rows:
        print("fit: summary file holds no rows", file=sys.stderr)
        return USAGE_EXIT
    cut = args.cut or rows[0]["cut"]
    s_values = sorted({row["s"] for row in rows if row.get("s")})
    s_filter = None
    if args.s is not None:
        s_filter = repr(float(args.s))
        if s_filter not in s_values:
            print(f"fit: no rows with s={args.s} (choices: {s_values})", file=sys.stderr)
            return USAGE_EXIT
    elif len(s_values) > 1:
        print(f"fit: summary mixes several s values {s_values}; pass --s", file=sys.stderr)
        return USAGE_EXIT
    points = []
    for row in rows:
        if row["cut"] != cut:
            continue
        if s_filter is not None and row["s"] != s_filter:
            continue
        n = int(float(row["n"]))
        if args.parity == "odd" and n % 2 == 0:
            continue
        if args.parity == "even" and n % 2 == 1:
            continue
        points.append((n, float(row["log_negativity"])))
    if len(points) < 4:
        print(f"fit: only {len(points)} points for cut {cut!r}", file=sys.stderr)
        return USAGE_EXIT
    if args.model == EXP_DECAY_SHIFT:
        fit = fit_exp_decay_shift(points)
    else:
        fit = fit_reciprocal_exp(points)
    payload = fit.to_dict()
    payload["cut"] = cut
    payload["parity"] = args.parity
    if fit.model == EXP_DECAY_SHIFT:
        payload["vanishing_N"] = vanishing_crossing(fit, threshold=args.threshold)
        payload["vanishing_threshold"] = args.threshold
    print(json.dumps(payload, indent=2, sort_keys=True))
    if args.out:
        _write_json(args.out, payload)
    return 0 if fit.converged else FAILURE_EXIT


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qubitbath",
        description="Multiqubit entanglement dynamics under local non-Markovian noise",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, kappa=True):
        p.add_argument("--config", required=True, help="experiment config JSON")
        p.add_argument("--out", help="output directory (default: config output.directory)")
        if kappa:
            p.add_argument(
                "--kappa",
                type=float,
                choices=[1.0, 0.25],
                help="override the dissipator prefactor convention",
            )

    p_run = sub.add_parser("run", help="run one trajectory")
    add_common(p_run)
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a parameter sweep")
    add_common(p_sweep)
    p_sweep.add_argument("--workers", type=int, help="parallel worker processes")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_div = sub.add_parser("divisibility", help="classify channel divisibility")
    p_div.add_argument("--config", required=True)
    p_div.add_argument("--out", help="directory for divisibility.json")
    p_div.set_defaults(func=_cmd_divisibility)

    p_oracle = sub.add_parser(
        "oracle-check", help="compare the integrator against the closed-form map"
    )
    add_common(p_oracle)
    p_oracle.add_argument("--threshold", type=float, default=1e-7)
    p_oracle.add_argument(
        "--compare-every", type=float, default=None, help="comparison cadence (default: every step)"
    )
    p_oracle.add_argument(
        "--dense", action="store_true", help="force the dense matrix stepper"
    )
    p_oracle.set_defaults(func=_cmd_oracle_check)

    p_fit = sub.add_parser("fit", help="fit a scaling model to a sweep summary")
    p_fit.add_argument("--input", required=True, help="summary.csv from a sweep")
    p_fit.add_argument(
        "--model", choices=[EXP_DECAY_SHIFT, RECIPROCAL_EXP], default=EXP_DECAY_SHIFT
    )
    p_fit.add_argument("--cut", help="bipartition label (default: first in file)")
    p_fit.add_argument("--s", type=float, help="restrict to one Ohmicity value")
    p_fit.add_argument("--parity", choices=["all", "odd", "even"], default="all")
    p_fit.add_argument(
        "--threshold",
        type=float,
        default=1e-3,
        help="vanishing threshold for the decay model",
    )
    p_fit.add_argument("--out", help="write the fit record to this JSON file")
    p_fit.set_defaults(func=_cmd_fit)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return USAGE_EXIT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_EXIT
    except (IntegrationError, QuadratureError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return FAILURE_EXIT


if __name__ == "__main__":
    sys.exit(main())
