"""Command line front end: orchestration, seeding, and CSV emission.

Each repetition owns a counter-derived RNG stream, so a run is
reproducible bit for bit in single-threaded mode and yields the same
per-repetition values (in the same row order) when fanned out to a
worker pool. Wall-clock columns are measurements and are exempt from
that guarantee.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .config import EXPERIMENTS, GHZ_PROTOCOLS, ConfigError, RunConfig, parse_config
from .dephasing import run_ensemble
from .protocols import memory_profile, run_ghz, run_nonlocal_cnot
from .pulse import (
    inversion_infidelity,
    peak_inversion_time,
    propagate,
    pulse_window_infidelity,
)
from .register import InvariantViolation
from .seeding import derive_stream

SEED_ENV = "QNETSIM_SEED"

Row = list


def _ghz_rep(task: tuple) -> Row:
    profile, protocol, master_seed, rep = task
    t0 = time.perf_counter()
    out = run_ghz(profile, protocol, derive_stream(master_seed, rep))
    wall = time.perf_counter() - t0
    return [
        rep,
        rep,
        out.fidelity,
        out.duration,
        out.bell_pairs_used,
        out.restarts,
        wall,
    ]


def _cnot_rep(task: tuple) -> tuple[float, float]:
    profile, master_seed, stream = task
    out = run_nonlocal_cnot(profile, derive_stream(master_seed, stream))
    return out.fidelity, out.duration


def _map_tasks(tasks: list, fn, workers: int) -> list:
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    chunk = max(1, len(tasks) // (workers * 8))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks, chunksize=chunk))


def _run_ghz(cfg: RunConfig) -> tuple[list[str], list[Row], list[str]]:
    header = [
        "rep_index",
        "seed_stream",
        "fidelity",
        "duration",
        "bell_pairs_used",
        "restarts",
        "wall_duration",
    ]
    tasks = [
        (cfg.profile, cfg.ghz_protocol, cfg.master_seed, rep)
        for rep in range(cfg.repetitions)
    ]
    rows = _map_tasks(tasks, _ghz_rep, cfg.workers)
    fid = np.array([r[2] for r in rows])
    se = fid.std(ddof=1) / math.sqrt(len(fid)) if len(fid) > 1 else 0.0
    report = [
        f"ghz {cfg.ghz_protocol}: mean fidelity {fid.mean():.4f} "
        f"+- {se:.4f} over {len(fid)} reps"
    ]
    return header, rows, report


def _run_cnot_sweep(cfg: RunConfig) -> tuple[list[str], list[Row], list[str]]:
    header = [
        "rep_index",
        "seed_stream",
        "n_attempts",
        "repetitions",
        "f_e",
        "f_e_stderr",
        "f_av",
        "f_av_stderr",
        "duration_p16",
        "duration_p50",
        "duration_p84",
        "wall_duration",
    ]
    reps = cfg.repetitions
    rows: list[Row] = []
    report: list[str] = []
    for i, n_attempts in enumerate(cfg.sweep_attempts):
        profile = memory_profile(n_attempts, cfg.profile)
        t0 = time.perf_counter()
        # stream law i * reps + r matches the library-level sweep helper
        tasks = [(profile, cfg.master_seed, i * reps + r) for r in range(reps)]
        results = _map_tasks(tasks, _cnot_rep, cfg.workers)
        wall = time.perf_counter() - t0
        f_e = np.array([f for f, _ in results])
        durations = np.array([d for _, d in results])
        f_av = (4.0 * f_e + 1.0) / 5.0
        p16, p50, p84 = np.percentile(durations, [16, 50, 84])
        rows.append(
            [
                i,
                i * reps,
                float(n_attempts),
                reps,
                float(f_e.mean()),
                float(f_e.std(ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0,
                float(f_av.mean()),
                float(f_av.std(ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0,
                float(p16),
                float(p50),
                float(p84),
                wall,
            ]
        )
        report.append(
            f"cnot-sweep n={n_attempts:g}: F_av {f_av.mean():.4f} "
            f"+- {f_av.std(ddof=1) / math.sqrt(reps) if reps > 1 else 0.0:.4f}"
        )
    return header, rows, report


def _run_dephasing(cfg: RunConfig) -> tuple[list[str], list[Row], list[str]]:
    header = [
        "rep_index",
        "seed_stream",
        "n_attempts",
        "samples",
        "fidelity",
        "stderr",
        "wall_duration",
    ]
    # one ensemble at the largest attempt count contains every shorter one
    points = sorted({int(n) for n in cfg.dephasing_attempts})
    ensemble = replace(
        cfg.dephasing, n_trials=points[-1], n_samples=cfg.dephasing_samples
    )
    t0 = time.perf_counter()
    curve = run_ensemble(ensemble, derive_stream(cfg.master_seed, 0))
    wall = time.perf_counter() - t0
    rows: list[Row] = []
    report: list[str] = []
    for i, n in enumerate(points):
        f_n = float(curve.fidelity[n - 1])
        se_n = float(curve.stderr[n - 1])
        rows.append([i, 0, float(n), ensemble.n_samples, f_n, se_n, wall])
        report.append(f"dephasing n={n:g}: F {f_n:.4f} +- {se_n:.4f}")
    return header, rows, report


def _run_dephasing_grid(cfg: RunConfig) -> tuple[list[str], list[Row], list[str]]:
    header = [
        "rep_index",
        "seed_stream",
        "p_init",
        "p_echo",
        "samples",
        "fidelity",
        "stderr",
        "wall_duration",
    ]
    rows: list[Row] = []
    cell = 0
    for p_init in cfg.grid_p_init:
        for p_echo in cfg.grid_p_echo:
            point = replace(
                cfg.dephasing,
                p_init=p_init,
                p_echo=p_echo,
                n_samples=cfg.dephasing_samples,
            )
            t0 = time.perf_counter()
            curve = run_ensemble(point, derive_stream(cfg.master_seed, cell))
            wall = time.perf_counter() - t0
            rows.append(
                [
                    cell,
                    cell,
                    p_init,
                    p_echo,
                    point.n_samples,
                    float(curve.fidelity[-1]),
                    float(curve.stderr[-1]),
                    wall,
                ]
            )
            cell += 1
    report = [f"dephasing-grid: {cell} cells written"]
    return header, rows, report


def _run_pulse(cfg: RunConfig) -> tuple[list[str], list[Row], list[str]]:
    header = [
        "time",
        "p_zero_m_minus1",
        "p_lower_m_minus1",
        "p_zero_m_0",
        "p_lower_m_0",
        "p_zero_m_plus1",
        "p_lower_m_plus1",
    ]
    traj = propagate(cfg.pulse)
    rows = [
        [t] + [float(traj.populations[k, m, e]) for m in range(3) for e in (1, 0)]
        for k, t in enumerate(traj.times)
    ]
    t_pi = peak_inversion_time(cfg.pulse)
    inv = inversion_infidelity(
        cfg.pulse, cfg.pulse_samples, derive_stream(cfg.master_seed, 0), pi_time=t_pi
    )
    window = pulse_window_infidelity(
        cfg.pulse, cfg.pulse_samples, derive_stream(cfg.master_seed, 1)
    )
    report = [
        f"pulse: peak inversion at {t_pi * 1e6:.3f} us",
        f"pulse: population inversion infidelity {inv:.4%} "
        f"({cfg.pulse_samples} detuning samples)",
        f"pulse: coherence window infidelity {window:.4%} "
        f"({cfg.pulse_samples} detuning samples)",
    ]
    return header, rows, report


_RUNNERS = {
    "ghz": _run_ghz,
    "cnot-sweep": _run_cnot_sweep,
    "dephasing": _run_dephasing,
    "dephasing-grid": _run_dephasing_grid,
    "pulse": _run_pulse,
}


def _write_csv(path: Path, header: list[str], rows: list[Row]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qnetsim",
        description="Monte Carlo experiments on simulated spin-qubit network hardware",
        exit_on_error=False,
    )
    parser.add_argument("experiment", choices=EXPERIMENTS)
    parser.add_argument("--config", type=Path, default=None, help="INI config file")
    parser.add_argument("--seed", type=int, default=None, help="master seed")
    parser.add_argument("--reps", type=int, default=None, help="repetition count")
    parser.add_argument("--out", type=Path, default=None, help="CSV output path")
    parser.add_argument("--workers", type=int, default=None, help="process pool size")
    parser.add_argument(
        "--protocol",
        choices=GHZ_PROTOCOLS,
        default=None,
        help="ghz protocol (overrides config)",
    )
    return parser


def _resolve_seed(cli_seed: int | None) -> int | None:
    """Flag beats environment beats config file."""
    if cli_seed is not None:
        return cli_seed
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return None
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except argparse.ArgumentError as exc:
        print(f"qnetsim: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help, or argparse paths that bypass the flag
        return 0 if exc.code in (0, None) else 1

    try:
        cfg = parse_config(args.config, args.experiment)
        overrides: dict = {}
        seed = _resolve_seed(args.seed)
        if seed is not None:
            overrides["master_seed"] = seed
        if args.reps is not None:
            overrides["repetitions"] = args.reps
        if args.out is not None:
            overrides["output"] = args.out
        if args.workers is not None:
            overrides["workers"] = args.workers
        if args.protocol is not None:
            overrides["ghz_protocol"] = args.protocol
        if overrides:
            cfg = replace(cfg, **overrides)
        header, rows, report = _RUNNERS[cfg.experiment](cfg)
    except ConfigError as exc:
        print(f"qnetsim: config error: {exc}", file=sys.stderr)
        return 1
    except InvariantViolation as exc:
        print(f"qnetsim: invariant violation: {exc}", file=sys.stderr)
        return 2

    _write_csv(cfg.output, header, rows)
    for line in report:
        print(line)
    print(f"wrote {len(rows)} rows to {cfg.output}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
