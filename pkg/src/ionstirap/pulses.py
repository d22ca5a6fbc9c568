"""Rabi-frequency envelopes for the pump and Stokes beams.

Times are in seconds, Rabi frequencies in rad/s.

Sign convention: ``t_delay = t_pump - t_stokes``, so a positive delay is the
counter-intuitive order (Stokes peak first).

A truncated schedule keeps only the transfer part of a counter-intuitive
sequence. The Stokes beam is switched on at full strength at
``t_stokes - t_pulse/2`` and held there until its center, after which it
follows its Gaussian. The pump rises on its Gaussian up to its center, is held
at full strength and is switched off at ``t_pump + t_pulse/2``. The sequence
therefore lasts ``(1 + s) * t_pulse``, the effective transfer time.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

__all__ = [
    "FWHM_PER_WIDTH",
    "Order",
    "GaussianPulse",
    "PulseSchedule",
    "RabiDrive",
    "envelope",
    "envelope_derivative",
    "make_stirap_schedule",
    "schedule_from_delay",
    "effective_transfer_time",
]

FWHM_PER_WIDTH = 2.0 * np.sqrt(2.0 * np.log(2.0))
# window half-margin around the pulse centers, in units of t_pulse
WINDOW_MARGIN = 2.0


class Order(str, enum.Enum):
    COUNTER_INTUITIVE = "counter_intuitive"
    INTUITIVE = "intuitive"


@dataclass(frozen=True)
class GaussianPulse:
    omega_max: float
    center: float
    width: float

    def __post_init__(self):
        if self.omega_max < 0:
            raise ValueError("omega_max must be >= 0")
        if not self.width > 0:
            raise ValueError("width must be > 0")

    @classmethod
    def from_fwhm(cls, omega_max: float, center: float, fwhm: float) -> "GaussianPulse":
        return cls(omega_max, center, fwhm / FWHM_PER_WIDTH)

    @property
    def fwhm(self) -> float:
        return FWHM_PER_WIDTH * self.width


def envelope(pulse: GaussianPulse, t):
    """Omega_max * exp(-(t - t_i)^2 / (2 t_width^2))."""
    t = np.asarray(t, dtype=float)
    return pulse.omega_max * np.exp(-((t - pulse.center) ** 2) / (2.0 * pulse.width**2))


def envelope_derivative(pulse: GaussianPulse, t):
    t = np.asarray(t, dtype=float)
    return -(t - pulse.center) / pulse.width**2 * envelope(pulse, t)


@dataclass(frozen=True)
class PulseSchedule:
    pump: GaussianPulse
    stokes: GaussianPulse
    t_pulse: float
    s_factor: float
    truncated: bool = False

    def __post_init__(self):
        if self.truncated and self.order is not Order.COUNTER_INTUITIVE:
            raise ValueError("truncated schedules require the counter-intuitive order")

    @property
    def t_delay(self) -> float:
        """Signed separation of the Rabi-frequency maxima, t_pump - t_stokes."""
        return self.pump.center - self.stokes.center

    @property
    def order(self) -> Order:
        return Order.INTUITIVE if self.t_delay < 0 else Order.COUNTER_INTUITIVE

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.pump.center + self.stokes.center)

    def window(self) -> tuple[float, float]:
        """Integration window.

        Untruncated: [min center - 2 t_pulse, max center + 2 t_pulse], where
        the Gaussians have dropped below e^-8 of their peak.
        Truncated: the switched sequence itself.
        """
        lo = min(self.pump.center, self.stokes.center)
        hi = max(self.pump.center, self.stokes.center)
        if self.truncated:
            return lo - 0.5 * self.t_pulse, hi + 0.5 * self.t_pulse
        return lo - WINDOW_MARGIN * self.t_pulse, hi + WINDOW_MARGIN * self.t_pulse

    def rabi(self, t):
        """(Omega_p(t), Omega_s(t))."""
        t = np.asarray(t, dtype=float)
        op = envelope(self.pump, t)
        os_ = envelope(self.stokes, t)
        if self.truncated:
            t0, t1 = self.window()
            inside = (t >= t0) & (t <= t1)
            op = np.where(t > self.pump.center, self.pump.omega_max, op)
            os_ = np.where(t < self.stokes.center, self.stokes.omega_max, os_)
            op = np.where(inside, op, 0.0)
            os_ = np.where(inside, os_, 0.0)
        return op, os_

    def rabi_derivative(self, t):
        """Analytic time derivatives of :meth:`rabi` (zero on held plateaus)."""
        t = np.asarray(t, dtype=float)
        dp = envelope_derivative(self.pump, t)
        ds = envelope_derivative(self.stokes, t)
        if self.truncated:
            t0, t1 = self.window()
            inside = (t >= t0) & (t <= t1)
            dp = np.where((t > self.pump.center) | ~inside, 0.0, dp)
            ds = np.where((t < self.stokes.center) | ~inside, 0.0, ds)
        return dp, ds

    @property
    def omega_max(self) -> float:
        return max(self.pump.omega_max, self.stokes.omega_max)

    def shifted(self, dt: float) -> "PulseSchedule":
        return replace(
            self,
            pump=replace(self.pump, center=self.pump.center + dt),
            stokes=replace(self.stokes, center=self.stokes.center + dt),
        )

    def mirrored(self) -> "PulseSchedule":
        """Swap which beam peaks first, reflecting the centers about the midpoint."""
        if self.truncated:
            raise ValueError("truncated schedules have no intuitive counterpart")
        m = self.midpoint
        return replace(
            self,
            pump=replace(self.pump, center=2 * m - self.pump.center),
            stokes=replace(self.stokes, center=2 * m - self.stokes.center),
        )

    def to_dict(self) -> dict:
        return {
            "t_pulse": self.t_pulse,
            "s_factor": self.s_factor,
            "t_delay": self.t_delay,
            "order": self.order.value,
            "truncated": self.truncated,
            "pump": {"omega_max": self.pump.omega_max, "center": self.pump.center, "fwhm": self.pump.fwhm},
            "stokes": {
                "omega_max": self.stokes.omega_max,
                "center": self.stokes.center,
                "fwhm": self.stokes.fwhm,
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PulseSchedule":
        return cls(
            pump=GaussianPulse.from_fwhm(d["pump"]["omega_max"], d["pump"]["center"], d["pump"]["fwhm"]),
            stokes=GaussianPulse.from_fwhm(
                d["stokes"]["omega_max"], d["stokes"]["center"], d["stokes"]["fwhm"]
            ),
            t_pulse=d["t_pulse"],
            s_factor=d["s_factor"],
            truncated=d.get("truncated", False),
        )


@dataclass(frozen=True)
class RabiDrive:
    """Constant-amplitude Raman drive on [start, start + duration]."""

    omega_p: float
    omega_s: float
    duration: float
    start: float = 0.0
    truncated: bool = field(default=False, init=False)

    def window(self) -> tuple[float, float]:
        return self.start, self.start + self.duration

    def rabi(self, t):
        t = np.asarray(t, dtype=float)
        on = (t >= self.start) & (t <= self.start + self.duration)
        return np.where(on, self.omega_p, 0.0), np.where(on, self.omega_s, 0.0)

    def rabi_derivative(self, t):
        z = np.zeros_like(np.asarray(t, dtype=float))
        return z, z

    @property
    def omega_max(self) -> float:
        return max(self.omega_p, self.omega_s)


def make_stirap_schedule(
    t_pulse: float,
    s_factor: float,
    order=Order.COUNTER_INTUITIVE,
    omega_p_max: float = 1.0,
    omega_s_max: float = 1.0,
    truncated: bool = False,
    pump_asymmetry: float = 0.0,
    midpoint: float | None = None,
) -> PulseSchedule:
    """Gaussian pump/Stokes pair with peak separation s_factor * t_pulse.

    The Stokes FWHM is ``t_pulse``; the pump FWHM is ``(1 - pump_asymmetry) *
    t_pulse``. Without an explicit ``midpoint`` the schedule is placed so
    that its window starts at t = 0.
    """
    order = Order(order)
    if not t_pulse > 0:
        raise ValueError("t_pulse must be > 0")
    if s_factor < 0:
        raise ValueError("s_factor must be >= 0; pick the order to flip the delay sign")
    if not 0 <= pump_asymmetry < 1:
        raise ValueError("pump_asymmetry must lie in [0, 1)")
    if truncated and order is not Order.COUNTER_INTUITIVE:
        raise ValueError("truncated schedules require the counter-intuitive order")
    delay = s_factor * t_pulse
    if midpoint is None:
        margin = 0.5 * t_pulse if truncated else WINDOW_MARGIN * t_pulse
        midpoint = margin + 0.5 * delay
    sign = 1.0 if order is Order.COUNTER_INTUITIVE else -1.0
    pump = GaussianPulse.from_fwhm(omega_p_max, midpoint + sign * delay / 2, (1 - pump_asymmetry) * t_pulse)
    stokes = GaussianPulse.from_fwhm(omega_s_max, midpoint - sign * delay / 2, t_pulse)
    return PulseSchedule(pump, stokes, t_pulse, s_factor, truncated)


def schedule_from_delay(t_pulse: float, t_delay: float, omega_p_max: float, omega_s_max: float, **kw):
    """Schedule from a signed delay (positive = counter-intuitive)."""
    order = Order.COUNTER_INTUITIVE if t_delay >= 0 else Order.INTUITIVE
    return make_stirap_schedule(
        t_pulse, abs(t_delay) / t_pulse, order, omega_p_max, omega_s_max, **kw
    )


def effective_transfer_time(schedule: PulseSchedule) -> float:
    """(1 + s) * t_pulse; defined for truncated schedules only."""
    if not schedule.truncated:
        raise ValueError("effective transfer time is defined for truncated schedules")
    return (1.0 + schedule.s_factor) * schedule.t_pulse
