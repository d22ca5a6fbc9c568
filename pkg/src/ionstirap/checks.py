"""Fast built-in invariant suite (``ionstirap run --check``).

Each check returns (passed, detail). The whole suite runs in a few seconds.
"""
from __future__ import annotations

import math
import time
from math import comb, factorial

import numpy as np

from .dynamics import SystemParams, evolve
from .experiments import extract_p0, temperature_from_p0
from .fockspace import CompositeState, coupling_scale, laguerre, make_thermal
from .lambda_model import eigenfrequencies, hamiltonian
from .pulses import FWHM_PER_WIDTH, GaussianPulse, RabiDrive, envelope, schedule_from_delay

US = 1e-6


def _laguerre_closed_forms():
    x = np.linspace(0.0, 0.5, 11)
    worst = 0.0
    for n in range(6):
        for k in range(3):
            exact = sum((-1) ** j * comb(n + k, n - j) * x**j / factorial(j) for j in range(n + 1))
            worst = max(worst, float(np.max(np.abs(laguerre(n, k, x) - exact) / np.abs(exact))))
    return worst < 1e-12, f"max relative error {worst:.2e}"


def _sideband_symmetry():
    d = max(
        abs(coupling_scale(n, "red_sideband", 0.3) - coupling_scale(n - 1, "blue_sideband", 0.3)) for n in range(1, 40)
    )
    return d == 0.0, f"max |red(n) - blue(n-1)| = {d:.1e}"


def _thermal_ratio():
    nbar = 2.5
    p = make_thermal(nbar, 30).populations
    r = np.max(np.abs(p[1:] / p[:-1] - nbar / (nbar + 1)))
    return r < 1e-14, f"max ratio deviation {r:.1e}"


def _eigenfrequencies():
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(50):
        op, os_ = rng.uniform(0.1, 1.0, 2)
        delta = rng.uniform(10, 500) * max(op, os_)
        num = np.linalg.eigvalsh(hamiltonian(op, os_, delta)) + delta
        ref = np.sort(eigenfrequencies(op, os_, delta))
        worst = max(worst, float(np.max(np.abs(num - ref)) / delta))
    return worst < 1e-10, f"max relative deviation {worst:.1e}"


def _fwhm():
    p = GaussianPulse.from_fwhm(1.0, 0.0, 100 * US)
    half = float(envelope(p, 50 * US))
    return abs(half - 0.5) < 1e-12 and math.isclose(p.fwhm / p.width, FWHM_PER_WIDTH), f"envelope at half-width {half:.15f}"


def _rabi_oracle():
    p = SystemParams(n_max=4)
    om = p.beam_rabi()
    rabi = p.target_effective_rabi
    t_pi = math.pi / rabi
    drive = RabiDrive(om, om, 1.5 * t_pi)
    grid = np.linspace(0, 1.5 * t_pi, 31)
    tr = evolve(CompositeState.product(0, 0, 2, 4), p, drive, grid=grid, tol=1e-12)
    err = float(np.max(np.abs(tr.population(3) - np.sin(rabi * grid / 2) ** 2)))
    return err < 1e-6, f"max |P3 - sin^2(Omega t / 2)| = {err:.1e}"


def _stirap_hygiene():
    p = SystemParams()
    om = p.beam_rabi()
    sch = schedule_from_delay(120 * US, 80 * US, om, om)
    tr = evolve(CompositeState.product(0, 0, 2, p.n_max), p, sch, as_density=True, store_states=False)
    d = tr.diagnostics
    ok = d["trace_residual"] < 1e-9 and d["hermiticity_residual"] < 1e-10 and d["purity_drift"] < 1e-8
    eff = tr.population(3)[-1]
    return ok and eff > 0.98, (
        f"transfer {eff:.6f}, trace {d['trace_residual']:.1e}, herm {d['hermiticity_residual']:.1e}, "
        f"purity {d['purity_drift']:.1e}"
    )


def _delay_symmetry():
    p = SystemParams(n_max=4)
    om = p.beam_rabi()
    eff = []
    for d in (80 * US, -80 * US):
        sch = schedule_from_delay(120 * US, d, om, om)
        eff.append(evolve(CompositeState.product(0, 0, 2, 4), p, sch, store_states=False).population(3)[-1])
    diff = abs(eff[0] - eff[1])
    return diff < 1e-3, f"|eff(+80) - eff(-80)| = {diff:.1e}"


def _cross_solver():
    eff = SystemParams(n_max=4, sideband_rwa=False)
    full = SystemParams(n_max=4, electronic_levels=3, detuning_rescale=50)
    res = []
    for p in (eff, full):
        om = p.beam_rabi()
        sch = schedule_from_delay(120 * US, 80 * US, om, om)
        grid = np.linspace(*sch.window(), 3)
        init = CompositeState.product(0, 0, p.electronic_levels, 4)
        res.append(evolve(init, p, sch, grid=grid, store_states=False).population(3)[-1])
    diff = abs(res[0] - res[1])
    return diff < 1e-2, f"|effective - full| = {diff:.1e} at Delta = 50 Omega_max"


def _thermometry():
    nbar = 11.5
    x = np.linspace(100, 160, 13) * US
    p0 = 1 / (nbar + 1)
    p, err = extract_p0((x, np.full(x.size, 0.3)), (x, np.full(x.size, 0.3 + p0)))
    t = temperature_from_p0(0.08, 2 * math.pi * 2.2e6, 2 * math.pi * 41.3e6)
    return abs(p - p0) < 1e-12 and abs(t - 1.3) < 0.2, f"p0 = {p:.4f}, T/T_D(0.08) = {t:.3f}"


CHECKS = [
    ("laguerre matches closed forms", _laguerre_closed_forms),
    ("red sideband = blue sideband of n-1", _sideband_symmetry),
    ("thermal geometric ratio", _thermal_ratio),
    ("eigenfrequencies vs diagonalization", _eigenfrequencies),
    ("Gaussian FWHM", _fwhm),
    ("Rabi oscillation oracle", _rabi_oracle),
    ("STIRAP trace/Hermiticity/purity", _stirap_hygiene),
    ("delay-sign symmetry", _delay_symmetry),
    ("full vs effective model", _cross_solver),
    ("thermometry chain", _thermometry),
]


def run_checks():
    rows = []
    for name, fn in CHECKS:
        t0 = time.perf_counter()
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashing check is a failed check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        rows.append((name, bool(ok), f"{detail} ({time.perf_counter() - t0:.2f} s)"))
    return rows


def format_table(rows) -> str:
    width = max(len(n) for n, _, _ in rows)
    lines = [f"{'check':<{width}}  result  detail"]
    for name, ok, detail in rows:
        lines.append(f"{name:<{width}}  {'PASS' if ok else 'FAIL':<6}  {detail}")
    passed = sum(ok for _, ok, _ in rows)
    lines.append(f"{passed}/{len(rows)} checks passed")
    return "\n".join(lines)
