"""Command-line entry point.

    ionstirap run CONFIG [--out DIR] [--jobs N] [--tol X]
    ionstirap run --check [--json]
    ionstirap list [--json]

Exit status: 0 success, 1 failed checks, 2 invalid configuration,
3 numerical failure (partial results kept, see failures.json).
The output directory defaults to $IONSTIRAP_OUT, then the config's
``[output] dir``, then ./results.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import warnings
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, load_config
from .dynamics import IntegrationError
from .experiments import (
    ExperimentKind,
    SweepResult,
    adiabaticity_traces,
    compare_rabi_stirap,
    delay_scan,
    fock_dynamics,
    map_2d,
    thermal_pulse_length_scan,
    thermometry,
    _jsonable,
)
from .fockspace import Transition

ENV_OUT = "IONSTIRAP_OUT"
US = 1e-6

CATALOG = {
    "adiabaticity": {
        "figure": "Fig. 2",
        "outputs": ["fig2.csv"],
        "description": "coupling |dTheta/dt| vs dark-state splitting along the pulse sequence",
        "defaults": {
            "t_pulse": ("100 us", "reported"),
            "t_delay": ("30, 80, 130 us", "reported"),
            "ratio_threshold": (10, "chosen"),
            "beam Rabi frequency": ("balanced, from target_effective_rabi", "chosen"),
        },
    },
    "delay_scan": {
        "figure": "Fig. 3a",
        "outputs": ["fig3a.csv"],
        "description": "transfer vs signed delay t_pump - t_stokes (positive = counter-intuitive)",
        "defaults": {
            "t_pulse": ("120 us", "reported"),
            "t_delay": ("-160..160 us step 2 us", "chosen"),
            "smoothing": ("5 points", "chosen"),
            "initial": ("|1>|n=0>", "reported"),
        },
    },
    "map_2d": {
        "figure": "Fig. 4a (carrier), Fig. 5a (blue sideband)",
        "outputs": ["fig4.csv", "fig5.csv"],
        "description": "transfer over pulse length x delay scaling factor",
        "defaults": {
            "t_pulse": ("5..200 us step 5 us", "chosen"),
            "s_factor": ("0..1.9 step 0.1", "chosen"),
            "initial": ("motional ground state", "reported"),
        },
    },
    "fock_dynamics": {
        "figure": "Fig. 6a (carrier), Fig. 6b (red sideband)",
        "outputs": ["fig6a.csv", "fig6b.csv"],
        "description": "time-resolved transfer for initial Fock states n = 0..14",
        "defaults": {
            "carrier": ("s = 0.7, t_pulse = 50 us", "reported"),
            "red sideband": ("s = 0.4, t_pulse = 100 us", "reported"),
            "n_max": ("max n + 4", "chosen"),
        },
    },
    "thermal_pulse_length_scan": {
        "figure": "thermal vs ground-state comparison",
        "outputs": ["comp_thermal.csv"],
        "description": "truncated-STIRAP transfer vs pulse length, ground and thermal initial states",
        "defaults": {
            "s_factor": ("0.5", "reported"),
            "mean_n": ("11.5", "inferred"),
            "t_pulse": ("10..160 us step 5 us", "chosen"),
        },
    },
    "compare_rabi_stirap": {
        "figure": "Fig. 7a (blue sideband), Fig. 7b (carrier)",
        "outputs": ["fig7a.csv", "fig7b.csv"],
        "description": "thermal state: constant Raman drive vs truncated STIRAP",
        "defaults": {
            "s_factor": ("0.5 sideband, 0.7 carrier", "reported"),
            "mean_n": ("11.5", "inferred"),
            "rabi_time": ("0.5..60 us step 0.5 us", "chosen"),
            "transfer_time": ("15..450 us step 15 us", "chosen"),
        },
    },
    "thermometry": {
        "figure": "ground-state population and temperature",
        "outputs": ["thermometry.json", "thermometry_scan.csv"],
        "description": "p0 = <BSB> - <RSB> over a plateau window, then T / T_Doppler",
        "defaults": {
            "window": ("120..150 us", "reported"),
            "mean_n": ("11.5", "inferred"),
            "trap_frequency": ("2.2 MHz", "reported"),
            "linewidth": ("41.3 MHz", "chosen"),
        },
    },
}


def _catalog() -> list:
    out = []
    for kind in ExperimentKind:
        entry = CATALOG[kind.value]
        out.append(
            {
                "kind": kind.value,
                "figure": entry["figure"],
                "outputs": entry["outputs"],
                "description": entry["description"],
                "defaults": {k: {"value": v, "provenance": p} for k, (v, p) in entry["defaults"].items()},
            }
        )
    return out


def cmd_list(args) -> int:
    cat = _catalog()
    if args.json:
        print(json.dumps(cat, indent=2))
        return 0
    for e in cat:
        print(f"{e['kind']:<28} {e['figure']}")
        print(f"    {e['description']}")
        print(f"    outputs: {', '.join(e['outputs'])}")
        for k, d in e["defaults"].items():
            print(f"    {k}: {d['value']} [{d['provenance']}]")
    return 0


# ---------------------------------------------------------------- outputs


def _header(cfg: RunConfig) -> list:
    return [f"config_hash: {cfg.hash}", f"kind: {cfg.spec.kind.value}", f"version: {__version__}"]


GNUPLOT = {
    "fig2": "set logscale y\nplot '{csv}' using 2:3 with lines title 'coupling', '' using 2:4 with lines title 'splitting'",
    "fig3a": "plot '{csv}' using 1:2 with points title 'simulated', '' using 1:8 with lines title 'moving average'",
    "fig4": "set pm3d map\nsplot '{csv}' using 2:3:4",
    "fig5": "set pm3d map\nsplot '{csv}' using 2:3:4",
    "fig6a": "plot '{csv}' using 2:3:1 with lines lc variable",
    "fig6b": "plot '{csv}' using 2:3:1 with lines lc variable",
    "fig7a": "plot '{csv}' using 2:3 with lines",
    "fig7b": "plot '{csv}' using 2:3 with lines",
    "comp_thermal": "plot '{csv}' using 2:3 with linespoints",
}


def _write_gnuplot(out: Path, stem: str, cfg: RunConfig):
    body = GNUPLOT.get(stem, "plot '{csv}' using 1:2 with lines")
    with open(out / f"{stem}.gp", "w") as fh:
        fh.write(f"# config_hash: {cfg.hash}\n")
        fh.write("set datafile separator ','\nset key autotitle columnhead\n")
        fh.write(body.format(csv=f"{stem}.csv") + "\n")


def _write_sweep(out: Path, stem: str, res: SweepResult, cfg: RunConfig) -> list:
    res.to_csv(out / f"{stem}.csv", _header(cfg))
    res.write_metadata(out / f"{stem}.json", {"config_hash": cfg.hash, "version": __version__})
    _write_gnuplot(out, stem, cfg)
    return [f"{stem}.csv", f"{stem}.json", f"{stem}.gp"]


def _write_json(path: Path, obj: dict, cfg: RunConfig):
    obj = {**obj, "config_hash": cfg.hash, "version": __version__}
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)


def _stem(kind: ExperimentKind, tr: Transition) -> str:
    table = {
        (ExperimentKind.MAP_2D, Transition.CARRIER): "fig4",
        (ExperimentKind.MAP_2D, Transition.BLUE_SIDEBAND): "fig5",
        (ExperimentKind.FOCK_DYNAMICS, Transition.CARRIER): "fig6a",
        (ExperimentKind.FOCK_DYNAMICS, Transition.RED_SIDEBAND): "fig6b",
        (ExperimentKind.COMPARE_RABI_STIRAP, Transition.BLUE_SIDEBAND): "fig7a",
        (ExperimentKind.COMPARE_RABI_STIRAP, Transition.CARRIER): "fig7b",
    }
    return table.get((kind, tr), f"{kind.value}_{tr.value}")


def _write_adiabaticity(out: Path, traces: dict, cfg: RunConfig) -> list:
    with open(out / "fig2.csv", "w", newline="") as fh:
        for line in _header(cfg):
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow(["t_delay_us", "t_us", "coupling_rad_s", "splitting_rad_s", "violated"])
        for delay, tr in traces.items():
            for t, c, s, v in zip(tr.times, tr.coupling, tr.splitting, tr.violated):
                w.writerow([repr(delay / US), repr(float(t) / US), repr(float(c)), repr(float(s)), int(v)])
    first = next(iter(traces.values()))
    md = {
        "violation_intervals_us": {
            f"{k / US:g}": [[a / US, b / US] for a, b in tr.violation_intervals] for k, tr in traces.items()
        },
        "margin_ratio": {f"{k / US:g}": tr.margin_ratio for k, tr in traces.items()},
        "ratio_threshold": first.ratio_threshold,
        "omega_max_rad_s": first.metadata["omega_p_max_rad_s"],
        "delta_rad_s": first.metadata["delta_rad_s"],
        "t_pulse_s": first.metadata["t_pulse_s"],
        "note": "absolute Rabi-frequency scale follows the default beam derivation",
    }
    _write_json(out / "fig2.json", md, cfg)
    _write_gnuplot(out, "fig2", cfg)
    return ["fig2.csv", "fig2.json", "fig2.gp"]


def execute(cfg: RunConfig, out: Path, jobs: int | None) -> tuple[list, list]:
    """Run the configured experiment; returns (written files, failure records)."""
    spec = cfg.spec
    kind = spec.kind
    files, failures = [], []

    def record(stem, res):
        files.extend(_write_sweep(out, stem, res, cfg))
        for i in res.failed:
            failures.append({"file": f"{stem}.csv", "row": i, "status": res.status[i]})

    if kind is ExperimentKind.ADIABATICITY:
        files += _write_adiabaticity(out, adiabaticity_traces(spec), cfg)
    elif kind is ExperimentKind.DELAY_SCAN:
        record("fig3a", delay_scan(spec, jobs))
    elif kind is ExperimentKind.MAP_2D:
        for tr in spec.transitions:
            record(_stem(kind, tr), map_2d(replace(spec, transitions=(tr,)), jobs))
    elif kind is ExperimentKind.FOCK_DYNAMICS:
        for tr in spec.transitions:
            res, _ = fock_dynamics(replace(spec, transitions=(tr,)), jobs)
            record(_stem(kind, tr), res)
    elif kind is ExperimentKind.THERMAL_PULSE_LENGTH_SCAN:
        record("comp_thermal", thermal_pulse_length_scan(spec, jobs))
    elif kind is ExperimentKind.COMPARE_RABI_STIRAP:
        for tr in spec.transitions:
            record(_stem(kind, tr), compare_rabi_stirap(replace(spec, transitions=(tr,)), jobs))
    elif kind is ExperimentKind.THERMOMETRY:
        summary, scan = thermometry(spec, jobs)
        record("thermometry_scan", scan)
        _write_json(out / "thermometry.json", summary, cfg)
        files.append("thermometry.json")
    return files, failures


def _error(kind: str, message: str, code: int, **extra) -> int:
    print(json.dumps({"error": kind, "message": message, "exit_status": code, **extra}), file=sys.stderr)
    return code


def _output_dir(args, cfg: RunConfig) -> Path:
    if args.out:
        return Path(args.out)
    if os.environ.get(ENV_OUT):
        return Path(os.environ[ENV_OUT])
    if cfg.output_dir:
        return Path(cfg.output_dir)
    return Path("results")


def cmd_run(args) -> int:
    if args.check:
        from .checks import format_table, run_checks

        rows = run_checks()
        if args.json:
            print(json.dumps([{"name": n, "passed": ok, "detail": d} for n, ok, d in rows], indent=2))
        else:
            print(format_table(rows))
        return 0 if all(ok for _, ok, _ in rows) else 1
    if not args.config:
        return _error("usage", "run needs a config file (or --check)", 2)
    try:
        cfg = load_config(args.config)
        if args.tol is not None:
            cfg = cfg.with_tol(args.tol)
    except ConfigError as exc:
        return _error("config", str(exc), 2, config=str(args.config))
    jobs = args.jobs if args.jobs is not None else (os.cpu_count() or 1)
    if jobs < 1:
        return _error("usage", "--jobs must be >= 1", 2)
    out = _output_dir(args, cfg)
    out.mkdir(parents=True, exist_ok=True)
    files, failures = [], []
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            files, failures = execute(cfg, out, jobs)
    except (IntegrationError, FloatingPointError, np.linalg.LinAlgError) as exc:
        failures.append({"file": None, "row": None, "status": f"failed: {exc}"})
        caught = []
    warn_list = [str(w.message) for w in caught]
    manifest = {
        "config": str(args.config),
        "kind": cfg.spec.kind.value,
        "files": files,
        "warnings": warn_list,
        "failures": len(failures),
    }
    _write_json(out / "run.json", manifest, cfg)
    if failures:
        _write_json(out / "failures.json", {"failures": failures}, cfg)
        return _error("numerical", f"{len(failures)} sweep point(s) failed; see failures.json", 3, out=str(out))
    for w in warn_list:
        print(f"warning: {w}", file=sys.stderr)
    print(f"wrote {len(files)} files to {out} (config_hash {cfg.hash[:12]})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ionstirap", description="STIRAP simulations of a trapped ion")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run an experiment config or the invariant checks")
    r.add_argument("config", nargs="?", help="TOML run configuration")
    r.add_argument("--out", help="output directory")
    r.add_argument("--jobs", type=int, default=None, help="worker processes (default: all cores)")
    r.add_argument("--tol", type=float, default=None, help="integrator tolerance override")
    r.add_argument("--check", action="store_true", help="run the invariant suite instead")
    r.add_argument("--json", action="store_true", help="machine-readable check report")
    r.set_defaults(func=cmd_run)
    ls = sub.add_parser("list", help="list experiment kinds")
    ls.add_argument("--json", action="store_true")
    ls.set_defaults(func=cmd_list)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
