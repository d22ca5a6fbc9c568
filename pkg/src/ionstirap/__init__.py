"""Stimulated Raman adiabatic passage in a trapped ion: a three-level Lambda
system coupled to one quantized motional mode."""

__version__ = "0.1.0"

from .dynamics import SystemParams, Trajectory, evolve, evolve_batch, transfer_efficiency
from .fockspace import CompositeState, MotionalDistribution, Transition, coupling_scale, laguerre, make_thermal
from .pulses import GaussianPulse, PulseSchedule, RabiDrive, make_stirap_schedule, schedule_from_delay

__all__ = [
    "SystemParams",
    "Trajectory",
    "evolve",
    "evolve_batch",
    "transfer_efficiency",
    "CompositeState",
    "MotionalDistribution",
    "Transition",
    "coupling_scale",
    "laguerre",
    "make_thermal",
    "GaussianPulse",
    "PulseSchedule",
    "RabiDrive",
    "make_stirap_schedule",
    "schedule_from_delay",
]
