"""Motional Fock space: Laguerre polynomials, Lamb-Dicke matrix elements,
thermal distributions and composite electronic x motional states.

Composite basis ordering is electronic-major: index = level_index * n_max + n,
i.e. the ordering of ``np.kron(electronic, motional)``.
"""
from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass
from math import exp, lgamma, sqrt

import numpy as np

__all__ = [
    "Transition",
    "TruncationWarning",
    "MotionalDistribution",
    "CompositeState",
    "laguerre",
    "lamb_dicke_element",
    "coupling_scale",
    "make_thermal",
    "ground_state_population",
    "fock_distribution",
    "composite_index",
]

MAX_LAGUERRE_ORDER = 200
THERMAL_TAIL_WARN = 1e-2


class Transition(str, enum.Enum):
    CARRIER = "carrier"
    BLUE_SIDEBAND = "blue_sideband"
    RED_SIDEBAND = "red_sideband"

    @property
    def order(self) -> int:
        """Change of the motional quantum number on |1> -> |3>."""
        return {"carrier": 0, "blue_sideband": 1, "red_sideband": -1}[self.value]

    @classmethod
    def from_order(cls, k: int) -> "Transition":
        for tr in cls:
            if tr.order == k:
                return tr
        raise ValueError(f"no named transition for sideband order {k}")


class TruncationWarning(UserWarning):
    """Fock-space truncation is too tight for the requested state or dynamics.

    ``quantity`` names what was measured ('thermal_tail' or
    'top_level_population'), ``value`` is the measured number.
    """

    def __init__(self, message: str, quantity: str, value: float, n_max: int):
        super().__init__(message)
        self.quantity = quantity
        self.value = value
        self.n_max = n_max


def laguerre(n: int, k: int, x):
    """Generalized Laguerre polynomial L_n^k(x) by upward three-term recurrence.

    (m+1) L_{m+1} = (2m + 1 + k - x) L_m - (m + k) L_{m-1}

    Stable for the small arguments (x = eta^2 < 0.1) used for Lamb-Dicke
    factors. ``x`` may be a scalar or an array.
    """
    if int(n) != n or int(k) != k:
        raise TypeError("n and k must be integers")
    n, k = int(n), int(k)
    if n < 0 or k < 0:
        raise ValueError(f"laguerre requires n >= 0 and k >= 0, got n={n}, k={k}")
    if n > MAX_LAGUERRE_ORDER:
        raise ValueError(f"n={n} exceeds supported order {MAX_LAGUERRE_ORDER}")
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if n == 0:
        return prev if prev.ndim else float(prev)
    cur = 1.0 + k - x
    for m in range(1, n):
        prev, cur = cur, ((2 * m + 1 + k - x) * cur - (m + k) * prev) / (m + 1)
    return cur if cur.ndim else float(cur)


def lamb_dicke_element(n_to: int, n_from: int, eta: float) -> complex:
    """<n_to| exp(i eta (a + a^dag)) |n_from>.

    e^{-eta^2/2} (i eta)^|dn| sqrt(n_<! / n_>!) L_{n_<}^{|dn|}(eta^2)
    """
    if n_to < 0 or n_from < 0:
        raise ValueError("Fock indices must be non-negative")
    lo, hi = min(n_to, n_from), max(n_to, n_from)
    dn = hi - lo
    mag = exp(-eta * eta / 2) * eta**dn * exp(0.5 * (lgamma(lo + 1) - lgamma(hi + 1)))
    return complex(mag * laguerre(lo, dn, eta * eta)) * (1j**dn)


def coupling_scale(n: int, transition, eta: float) -> float:
    """Rabi frequency of |n> on ``transition`` relative to the bare two-photon
    Rabi frequency, Debye-Waller factor e^{-eta^2/2} included.

    carrier:        e^{-eta^2/2} L_n^0(eta^2)
    blue sideband:  e^{-eta^2/2} eta sqrt(n!/(n+1)!) L_n^1(eta^2)
    red sideband:   blue sideband of n - 1

    The sign is kept, so a zero crossing of the Laguerre factor shows up as a
    sign change.
    """
    transition = Transition(transition)
    if not 0.0 < eta < 1.0:
        raise ValueError(f"eta must lie in (0, 1), got {eta}")
    if n < 0:
        raise ValueError("Fock index must be non-negative")
    dw = exp(-eta * eta / 2)
    if transition is Transition.CARRIER:
        return dw * laguerre(n, 0, eta * eta)
    if transition is Transition.RED_SIDEBAND:
        if n == 0:
            raise ValueError("red sideband needs n >= 1 (no lower motional state)")
        n = n - 1
    return dw * eta * laguerre(n, 1, eta * eta) / sqrt(n + 1)


@dataclass(frozen=True)
class MotionalDistribution:
    """Fock-state populations p_0 .. p_{n_max-1}.

    ``tail`` is the probability lost to truncation, 1 - sum(populations).
    """

    populations: np.ndarray
    label: str = ""

    def __post_init__(self):
        p = np.asarray(self.populations, dtype=float)
        if p.ndim != 1 or p.size < 1:
            raise ValueError("populations must be a non-empty 1-d array")
        if np.any(p < 0):
            raise ValueError("populations must be non-negative")
        if p.sum() > 1 + 1e-12:
            raise ValueError(f"populations sum to {p.sum()} > 1")
        p.setflags(write=False)
        object.__setattr__(self, "populations", p)

    @property
    def n_max(self) -> int:
        return self.populations.size

    @property
    def tail(self) -> float:
        return max(0.0, 1.0 - float(self.populations.sum()))

    @property
    def mean_n(self) -> float:
        return float(np.arange(self.n_max) @ self.populations)

    def padded(self, n_max: int) -> "MotionalDistribution":
        if n_max < self.n_max:
            raise ValueError("cannot pad to a smaller truncation")
        p = np.zeros(n_max)
        p[: self.n_max] = self.populations
        return MotionalDistribution(p, self.label)


def make_thermal(mean_n: float, n_max: int) -> MotionalDistribution:
    """Bose-Einstein populations p_n = nbar^n / (nbar+1)^(n+1), n < n_max.

    Emits a :class:`TruncationWarning` when the discarded tail exceeds 1e-2.
    """
    if mean_n < 0:
        raise ValueError("mean_n must be >= 0")
    if n_max < 2:
        raise ValueError("n_max must be >= 2")
    n = np.arange(n_max)
    if mean_n == 0:
        p = (n == 0).astype(float)
    else:
        ratio = mean_n / (mean_n + 1.0)
        p = ratio**n / (mean_n + 1.0)
    dist = MotionalDistribution(p, label=f"thermal(nbar={mean_n:g})")
    if dist.tail > THERMAL_TAIL_WARN:
        warnings.warn(
            TruncationWarning(
                f"thermal tail {dist.tail:.3g} beyond n_max={n_max}; raise n_max",
                "thermal_tail",
                dist.tail,
                n_max,
            ),
            stacklevel=2,
        )
    return dist


def thermal_n_max(mean_n: float, tail: float = THERMAL_TAIL_WARN, floor: int = 16) -> int:
    """Smallest truncation (at least ``floor``) whose thermal tail is below ``tail``."""
    if mean_n <= 0:
        return floor
    ratio = mean_n / (mean_n + 1.0)
    need = int(np.ceil(np.log(tail) / np.log(ratio)))
    return max(floor, need + 1)


def fock_distribution(n: int, n_max: int) -> MotionalDistribution:
    if not 0 <= n < n_max:
        raise ValueError(f"Fock state {n} outside truncation {n_max}")
    p = np.zeros(n_max)
    p[n] = 1.0
    return MotionalDistribution(p, label=f"fock({n})")


def ground_state_population(dist: MotionalDistribution) -> float:
    return float(dist.populations[0])


def composite_index(level_index: int, n: int, n_max: int) -> int:
    return level_index * n_max + n


@dataclass
class CompositeState:
    """State on electronic (2 or 3 levels) x motional (n_max) space.

    Exactly one of ``vector`` (pure) or ``density`` is set.
    """

    electronic_dim: int
    motional_dim: int
    vector: np.ndarray | None = None
    density: np.ndarray | None = None

    def __post_init__(self):
        if self.electronic_dim not in (2, 3):
            raise ValueError("electronic_dim must be 2 or 3")
        if self.motional_dim < 1:
            raise ValueError("motional_dim must be >= 1")
        if (self.vector is None) == (self.density is None):
            raise ValueError("give exactly one of vector or density")
        d = self.dim
        if self.vector is not None:
            self.vector = np.asarray(self.vector, dtype=complex)
            if self.vector.shape != (d,):
                raise ValueError(f"vector must have shape ({d},)")
            if abs(np.vdot(self.vector, self.vector).real - 1) > 1e-9:
                raise ValueError("state vector is not normalized")
        else:
            rho = np.asarray(self.density, dtype=complex)
            if rho.shape != (d, d):
                raise ValueError(f"density must have shape ({d}, {d})")
            if np.max(np.abs(rho - rho.conj().T)) > 1e-10:
                raise ValueError("density matrix is not Hermitian")
            if abs(np.trace(rho).real - 1) > 1e-9:
                raise ValueError("density matrix trace differs from 1")
            self.density = rho

    @property
    def dim(self) -> int:
        return self.electronic_dim * self.motional_dim

    @property
    def is_pure(self) -> bool:
        return self.vector is not None

    def as_density(self) -> np.ndarray:
        if self.density is not None:
            return self.density
        return np.outer(self.vector, self.vector.conj())

    @classmethod
    def product(cls, level_index: int, n: int, electronic_dim: int, n_max: int) -> "CompositeState":
        """Pure |level> (x) |n>; ``level_index`` counts from 0."""
        if not 0 <= level_index < electronic_dim:
            raise ValueError("level index out of range")
        if not 0 <= n < n_max:
            raise ValueError("Fock index out of range")
        v = np.zeros(electronic_dim * n_max, dtype=complex)
        v[composite_index(level_index, n, n_max)] = 1.0
        return cls(electronic_dim, n_max, vector=v)

    @classmethod
    def mixed(
        cls, level_index: int, dist: MotionalDistribution, electronic_dim: int
    ) -> "CompositeState":
        """Diagonal |level><level| (x) sum_n p_n |n><n|, renormalized over the truncation."""
        p = dist.populations / dist.populations.sum()
        rho = np.zeros((electronic_dim * dist.n_max,) * 2, dtype=complex)
        idx = level_index * dist.n_max + np.arange(dist.n_max)
        rho[idx, idx] = p
        return cls(electronic_dim, dist.n_max, density=rho)
