"""Run configuration: TOML files with explicit units, validated before any work.

Physical quantities are strings with a unit suffix, e.g. ``"120 us"`` or
``"9.2 GHz"``. Frequencies given in Hz/kHz/MHz/GHz are cyclic and are
converted to angular frequency (x 2 pi); ``rad_s`` is taken as angular.
Unknown tables or keys are errors.

Example::

    experiment = "delay_scan"

    [params]
    delta = "9.2 GHz"
    trap_frequency = "2.2 MHz"
    eta = 0.3
    target_effective_rabi = "100 kHz"

    [schedule]
    t_pulse = "120 us"

    [sweep.t_delay]
    start = "-160 us"
    stop = "160 us"
    step = "2 us"
"""
from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass, replace
from pathlib import Path

import tomli

from .dynamics import SystemParams
from .experiments import Axis, ExperimentKind, InitialSpec, SweepSpec, default_spec
from .fockspace import Transition
from .integrate import TOL_RANGE
from .pulses import Order

__all__ = ["ConfigError", "RunConfig", "load_config", "parse_config", "parse_quantity", "config_hash"]

TWO_PI = 2.0 * math.pi
TIME_UNITS = {"ns": 1e-9, "us": 1e-6, "ms": 1e-3, "s": 1.0}
FREQ_UNITS = {"Hz": TWO_PI, "kHz": TWO_PI * 1e3, "MHz": TWO_PI * 1e6, "GHz": TWO_PI * 1e9, "rad_s": 1.0}
_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([A-Za-z_]+)\s*$")


class ConfigError(ValueError):
    """Invalid configuration; the CLI maps it to exit status 2."""


def parse_quantity(value, kind: str, where: str) -> float:
    """Parse ``"<number> <unit>"`` into SI (seconds or rad/s)."""
    units = TIME_UNITS if kind == "time" else FREQ_UNITS
    if not isinstance(value, str):
        raise ConfigError(f"{where}: expected a {kind} with unit suffix ({', '.join(units)}), got {value!r}")
    m = _QUANTITY.match(value)
    if not m:
        raise ConfigError(f"{where}: cannot parse {value!r} as '<number> <unit>'")
    num, unit = float(m.group(1)), m.group(2)
    if unit not in units:
        raise ConfigError(f"{where}: unit {unit!r} is not a {kind} unit ({', '.join(units)})")
    return num * units[unit]


def _number(value, where, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    if integer and int(value) != value:
        raise ConfigError(f"{where}: expected an integer, got {value!r}")
    return int(value) if integer else float(value)


def _check_keys(table: dict, allowed, where: str):
    if not isinstance(table, dict):
        raise ConfigError(f"{where}: expected a table")
    unknown = sorted(set(table) - set(allowed))
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(unknown)}; allowed: {', '.join(sorted(allowed))}")


PARAM_KEYS = {
    "delta": "freq",
    "two_photon_detuning": "freq",
    "trap_frequency": "freq",
    "target_effective_rabi": "freq",
    "eta": "float",
    "n_max": "int",
    "electronic_levels": "int",
    "sideband_rwa": "bool",
    "detuning_rescale": "float_or_none",
    "transition": "transition",
}
SCHEDULE_KEYS = {"t_pulse", "s_factor", "order", "truncated", "pump_asymmetry", "t_delay"}
INITIAL_KEYS = {"level", "fock", "mean_n"}
SOLVER_KEYS = {"tol"}
OUTPUT_KEYS = {"dir"}
OPTION_KEYS = {"window", "linewidth", "ratio_threshold", "time_points", "series"}
TOP_KEYS = {"experiment", "params", "schedule", "initial", "sweep", "solver", "output", "options", "seed"}
AXIS_KIND = {
    "t_delay": "time",
    "t_pulse": "time",
    "rabi_time": "time",
    "transfer_time": "time",
    "s_factor": "float",
    "n": "int",
}


@dataclass(frozen=True)
class RunConfig:
    spec: SweepSpec
    output_dir: str | None
    seed: int | None
    canonical: dict
    source: str = "<memory>"

    @property
    def hash(self) -> str:
        return config_hash(self.canonical)

    def with_tol(self, tol: float) -> "RunConfig":
        _check_tol(tol, "--tol")
        spec = replace(self.spec, tol=tol)
        return replace(self, spec=spec, canonical=_canonical(spec, self.seed))


def _canonical(spec: SweepSpec, seed) -> dict:
    """Fully resolved run description; equal dicts mean equal runs."""
    return {"spec": spec.to_dict(), "seed": seed}


def config_hash(canonical: dict) -> str:
    blob = json.dumps(canonical, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _check_tol(tol, where):
    lo, hi = TOL_RANGE
    if not lo <= tol <= hi:
        raise ConfigError(f"{where}: tol must lie in [{lo:g}, {hi:g}], got {tol:g}")


def _parse_params(table: dict) -> SystemParams:
    _check_keys(table, PARAM_KEYS, "[params]")
    kw = {}
    transition = None
    for key, val in table.items():
        kind = PARAM_KEYS[key]
        where = f"params.{key}"
        if kind == "freq":
            kw[key] = parse_quantity(val, "freq", where)
        elif kind == "float":
            kw[key] = _number(val, where)
        elif kind == "int":
            kw[key] = _number(val, where, integer=True)
        elif kind == "bool":
            if not isinstance(val, bool):
                raise ConfigError(f"{where}: expected true/false")
            kw[key] = val
        elif kind == "float_or_none":
            kw[key] = None if val == "none" else _number(val, where)
        elif kind == "transition":
            try:
                transition = Transition(val)
            except ValueError:
                raise ConfigError(f"{where}: unknown transition {val!r}") from None
    if transition is not None and "two_photon_detuning" in kw:
        raise ConfigError("[params]: give either transition or two_photon_detuning, not both")
    try:
        params = SystemParams(**kw)
        if transition is not None:
            params = params.with_transition(transition)
    except ValueError as exc:
        raise ConfigError(f"[params]: {exc}") from None
    return params


def _parse_axis(name: str, val) -> Axis:
    if name not in AXIS_KIND:
        raise ConfigError(f"[sweep]: unknown axis {name!r}; allowed: {', '.join(sorted(AXIS_KIND))}")
    kind = AXIS_KIND[name]
    where = f"sweep.{name}"

    def conv(x, w):
        if kind == "time":
            return parse_quantity(x, "time", w)
        return _number(x, w, integer=(kind == "int"))

    if isinstance(val, list):
        values = [conv(x, f"{where}[{i}]") for i, x in enumerate(val)]
    elif isinstance(val, dict):
        _check_keys(val, {"start", "stop", "step"}, where)
        if set(val) != {"start", "stop", "step"}:
            raise ConfigError(f"{where}: range needs start, stop and step")
        a, b, st = (conv(val[k], f"{where}.{k}") for k in ("start", "stop", "step"))
        if st <= 0 or b < a:
            raise ConfigError(f"{where}: need step > 0 and stop >= start")
        n = int(math.floor((b - a) / st + 1e-9)) + 1
        values = [a + st * i for i in range(n)]
    else:
        raise ConfigError(f"{where}: expected a list of values or a start/stop/step table")
    unit = {"time": "s", "float": "1", "int": "1"}[kind]
    try:
        return Axis(name, unit, tuple(values))
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def parse_config(doc: dict, source: str = "<memory>") -> RunConfig:
    """Validate a parsed TOML document and build the SweepSpec."""
    _check_keys(doc, TOP_KEYS, "config")
    if "experiment" not in doc:
        raise ConfigError("config: missing 'experiment'")
    try:
        kind = ExperimentKind(doc["experiment"])
    except ValueError:
        allowed = ", ".join(k.value for k in ExperimentKind)
        raise ConfigError(f"experiment: unknown kind {doc['experiment']!r}; allowed: {allowed}") from None

    params = _parse_params(doc.get("params", {}))
    spec = default_spec(kind, params)
    updates: dict = {}

    sched = doc.get("schedule", {})
    _check_keys(sched, SCHEDULE_KEYS, "[schedule]")
    if "t_pulse" in sched:
        updates["t_pulse"] = parse_quantity(sched["t_pulse"], "time", "schedule.t_pulse")
    if "s_factor" in sched:
        updates["s_factor"] = _number(sched["s_factor"], "schedule.s_factor")
    if "order" in sched:
        try:
            updates["order"] = Order(sched["order"])
        except ValueError:
            raise ConfigError(f"schedule.order: unknown order {sched['order']!r}") from None
    if "truncated" in sched:
        if not isinstance(sched["truncated"], bool):
            raise ConfigError("schedule.truncated: expected true/false")
        updates["truncated"] = sched["truncated"]
    if "pump_asymmetry" in sched:
        updates["pump_asymmetry"] = _number(sched["pump_asymmetry"], "schedule.pump_asymmetry")
    if "t_delay" in sched:
        # signed delay: its sign fixes the order, so it must agree with an explicit order
        d = parse_quantity(sched["t_delay"], "time", "schedule.t_delay")
        tp = updates.get("t_pulse", spec.t_pulse)
        order = Order.COUNTER_INTUITIVE if d >= 0 else Order.INTUITIVE
        if "order" in updates and updates["order"] is not order:
            raise ConfigError(
                f"schedule: t_delay = {sched['t_delay']} implies {order.value} but order = {updates['order'].value}"
            )
        if "s_factor" in updates and not math.isclose(updates["s_factor"], abs(d) / tp, rel_tol=1e-9):
            raise ConfigError("schedule: s_factor and t_delay disagree")
        updates["order"] = order
        updates["s_factor"] = abs(d) / tp
    if updates.get("s_factor", 0.0) < 0:
        raise ConfigError(
            "schedule.s_factor must be >= 0; a negative delay is expressed by order = \"intuitive\""
        )

    init = doc.get("initial", {})
    _check_keys(init, INITIAL_KEYS, "[initial]")
    if init:
        level = _number(init.get("level", 1), "initial.level", integer=True)
        fock = init.get("fock")
        mean_n = init.get("mean_n")
        if fock is None and mean_n is None:
            fock = 0
        try:
            updates["initial"] = InitialSpec(
                level,
                None if fock is None else _number(fock, "initial.fock", integer=True),
                None if mean_n is None else _number(mean_n, "initial.mean_n"),
            )
        except ValueError as exc:
            raise ConfigError(f"[initial]: {exc}") from None

    sweep = doc.get("sweep", {})
    if not isinstance(sweep, dict):
        raise ConfigError("[sweep]: expected a table")
    axes = {a.name: a for a in spec.axes}
    for key, val in sweep.items():
        if key == "transitions":
            if not isinstance(val, list) or not val:
                raise ConfigError("sweep.transitions: expected a non-empty list")
            try:
                updates["transitions"] = tuple(Transition(t) for t in val)
            except ValueError as exc:
                raise ConfigError(f"sweep.transitions: {exc}") from None
        elif key == "smoothing":
            updates["smoothing"] = _number(val, "sweep.smoothing", integer=True)
        else:
            if key not in axes:
                raise ConfigError(
                    f"[sweep]: axis {key!r} does not apply to {kind.value}; axes: {', '.join(axes)}"
                )
            axes[key] = _parse_axis(key, val)
    updates["axes"] = tuple(axes.values())

    solver = doc.get("solver", {})
    _check_keys(solver, SOLVER_KEYS, "[solver]")
    if "tol" in solver:
        tol = _number(solver["tol"], "solver.tol")
        _check_tol(tol, "solver.tol")
        updates["tol"] = tol

    opts = doc.get("options", {})
    _check_keys(opts, OPTION_KEYS, "[options]")
    options = dict(spec.options)
    if "window" in opts:
        w = opts["window"]
        if not isinstance(w, list) or len(w) != 2:
            raise ConfigError("options.window: expected [start, stop]")
        options["window"] = tuple(parse_quantity(x, "time", "options.window") for x in w)
    if "linewidth" in opts:
        options["linewidth"] = parse_quantity(opts["linewidth"], "freq", "options.linewidth")
    if "ratio_threshold" in opts:
        options["ratio_threshold"] = _number(opts["ratio_threshold"], "options.ratio_threshold")
    if "time_points" in opts:
        options["time_points"] = _number(opts["time_points"], "options.time_points", integer=True)
    if "series" in opts:
        ser = opts["series"]
        if not isinstance(ser, list) or not ser:
            raise ConfigError("options.series: expected a non-empty list")
        for item in ser:
            tr, _, init = str(item).partition(":")
            if tr not in {t.value for t in Transition} or init not in ("ground", "thermal"):
                raise ConfigError(f"options.series: {item!r} is not '<transition>:ground|thermal'")
        options["series"] = tuple(ser)
    if {"s_factor", "t_pulse", "t_delay"} & set(sched):
        # an explicit schedule applies to every transition
        options.pop("schedule_by_transition", None)
    updates["options"] = options

    try:
        spec = replace(spec, **updates)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    out = doc.get("output", {})
    _check_keys(out, OUTPUT_KEYS, "[output]")
    seed = doc.get("seed")
    if seed is not None:
        seed = _number(seed, "seed", integer=True)
    return RunConfig(spec, out.get("dir"), seed, _canonical(spec, seed), source)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return parse_config(doc, str(path))
