"""Closed-form analytics of the driven three-level Lambda system.

Units: hbar = 1, all frequencies in rad/s. Level ordering (|1>, |2>, |3>):
pump couples 1-2, Stokes couples 2-3, |2> is the far-detuned excited state.
"""
from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field

import numpy as np

from .pulses import PulseSchedule

__all__ = [
    "Regime",
    "AdiabaticityTrace",
    "hamiltonian",
    "eigenfrequencies",
    "mixing_angle",
    "dressed_states",
    "adiabaticity_trace",
    "classify_regime",
    "dark_state_splitting",
    "REGIME_THRESHOLD",
]

REGIME_THRESHOLD = 0.6
# relative size of Omega_p^2 + Omega_s^2 below which the mixing angle is held
_SUPPORT_FLOOR = 1e-24


class Regime(str, enum.Enum):
    RABI_OSCILLATION = "rabi_oscillation"
    ADIABATIC = "adiabatic"


def hamiltonian(omega_p, omega_s, delta_p, delta_s=None) -> np.ndarray:
    """RWA Hamiltonian

        H = 1/2 [[-2 Delta_p, Omega_p, 0],
                 [Omega_p, 0, Omega_s],
                 [0, Omega_s, -2 Delta_s]]
    """
    if delta_s is None:
        delta_s = delta_p
    return 0.5 * np.array(
        [
            [-2.0 * delta_p, omega_p, 0.0],
            [omega_p, 0.0, omega_s],
            [0.0, omega_s, -2.0 * delta_s],
        ],
        dtype=complex,
    )


def _root(omega_p, omega_s, delta):
    return np.sqrt(delta * delta + omega_p * omega_p + omega_s * omega_s)


def eigenfrequencies(omega_p, omega_s, delta):
    """(omega_0, omega_+, omega_-) at two-photon resonance.

    omega_0 = 0, omega_pm = (Delta +- sqrt(Delta^2 + Omega_p^2 + Omega_s^2)) / 2.

    These are measured from the bare ground-manifold energy -Delta: the
    spectrum of :func:`hamiltonian` equals these values minus Delta.
    """
    root = _root(omega_p, omega_s, delta)
    return 0.0 * root, 0.5 * (delta + root), 0.5 * (delta - root)


def dark_state_splitting(omega_p, omega_s, delta):
    """|omega_- - omega_0|, evaluated without cancellation for large Delta."""
    w2 = np.asarray(omega_p, dtype=float) ** 2 + np.asarray(omega_s, dtype=float) ** 2
    return 0.5 * w2 / (np.abs(delta) + _root(omega_p, omega_s, delta))


def mixing_angle(omega_p, omega_s):
    """Theta with tan(Theta) = Omega_p / Omega_s."""
    omega_p = np.asarray(omega_p, dtype=float)
    omega_s = np.asarray(omega_s, dtype=float)
    if np.any((omega_p == 0) & (omega_s == 0)):
        raise ValueError("mixing angle undefined when both Rabi frequencies vanish")
    theta = np.arctan2(omega_p, omega_s)
    return theta if theta.ndim else float(theta)


def dressed_states(theta: float):
    """Large-detuning dressed states (a0, a+, a-) in the bare basis.

    a0 = cos(Theta)|1> - sin(Theta)|3>,  a+ = |2>,  a- = sin(Theta)|1> + cos(Theta)|3>
    """
    c, s = np.cos(theta), np.sin(theta)
    a0 = np.array([c, 0.0, -s])
    ap = np.array([0.0, 1.0, 0.0])
    am = np.array([s, 0.0, c])
    return a0, ap, am


@dataclass
class AdiabaticityTrace:
    times: np.ndarray
    coupling: np.ndarray
    splitting: np.ndarray
    violated: np.ndarray
    violation_intervals: list = field(default_factory=list)
    margin_ratio: float = np.inf
    ratio_threshold: float = 10.0
    unsupported: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    def to_csv(self, path, header_lines=()):
        with open(path, "w", newline="") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            w = csv.writer(fh)
            w.writerow(["t_s", "coupling_rad_s", "splitting_rad_s", "violated"])
            for row in zip(self.times, self.coupling, self.splitting, self.violated):
                w.writerow([repr(float(row[0])), repr(float(row[1])), repr(float(row[2])), int(row[3])])


def _runs(mask: np.ndarray, times: np.ndarray):
    out = []
    i, n = 0, mask.size
    while i < n:
        if mask[i]:
            j = i
            while j + 1 < n and mask[j + 1]:
                j += 1
            out.append((float(times[i]), float(times[j])))
            i = j + 1
        else:
            i += 1
    return out


def adiabaticity_trace(
    schedule: PulseSchedule,
    delta: float,
    grid=None,
    ratio_threshold: float = 10.0,
    n_points: int = 2001,
) -> AdiabaticityTrace:
    """Both sides of the adiabatic criterion along ``schedule``.

    coupling  = |dTheta/dt| = |Omega_p' Omega_s - Omega_p Omega_s'| / (Omega_p^2 + Omega_s^2)
    splitting = |omega_- - omega_0|

    A grid point violates adiabaticity when splitting < ratio_threshold * coupling.
    Where both fields vanish the mixing angle is held, so coupling is 0 there
    and the point is flagged in ``unsupported``.
    """
    if grid is None:
        t0, t1 = schedule.window()
        grid = np.linspace(t0, t1, n_points)
    t = np.asarray(grid, dtype=float)
    if t.ndim != 1 or t.size < 2 or np.any(np.diff(t) <= 0):
        raise ValueError("grid must be strictly increasing with at least two points")
    if ratio_threshold <= 0:
        raise ValueError("ratio_threshold must be positive")
    op, os_ = schedule.rabi(t)
    dp, ds = schedule.rabi_derivative(t)
    w2 = op * op + os_ * os_
    peak = schedule.omega_max**2
    if peak == 0 or np.all(w2 <= _SUPPORT_FLOOR * peak):
        raise ValueError("degenerate schedule: both envelopes vanish on the grid")
    unsupported = w2 <= _SUPPORT_FLOOR * peak
    coupling = np.zeros_like(t)
    ok = ~unsupported
    coupling[ok] = np.abs(dp[ok] * os_[ok] - op[ok] * ds[ok]) / w2[ok]
    splitting = dark_state_splitting(op, os_, delta)
    violated = splitting < ratio_threshold * coupling
    with np.errstate(divide="ignore"):
        ratios = np.where(coupling > 0, splitting / np.where(coupling > 0, coupling, 1.0), np.inf)
    return AdiabaticityTrace(
        times=t,
        coupling=coupling,
        splitting=splitting,
        violated=violated,
        violation_intervals=_runs(violated, t),
        margin_ratio=float(ratios.min()),
        ratio_threshold=ratio_threshold,
        unsupported=unsupported,
        metadata={
            "delta_rad_s": float(delta),
            "omega_p_max_rad_s": float(schedule.pump.omega_max),
            "omega_s_max_rad_s": float(schedule.stokes.omega_max),
            "t_pulse_s": float(schedule.t_pulse),
            "t_delay_s": float(schedule.t_delay),
        },
    )


def classify_regime(s_factor: float) -> Regime:
    """Rabi-oscillation regime below s = 0.6, adiabatic at and above it."""
    if s_factor < 0:
        raise ValueError("s_factor must be >= 0")
    return Regime.ADIABATIC if s_factor >= REGIME_THRESHOLD else Regime.RABI_OSCILLATION
