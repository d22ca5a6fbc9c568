"""Time evolution of the ion: electronic levels (x) one motional mode.

Two models share one interface:

* full model (``electronic_levels=3``): the Lambda Hamiltonian per Fock block,
  motional energy n * trap_frequency, pump coupling dressed by the Lamb-Dicke
  operator exp(i eta (a + a^dag)) restricted to |dn| <= 2, Stokes coupling
  diagonal in n.
* effective model (``electronic_levels=2``): |2> adiabatically eliminated,
  giving ac-Stark shifts -Omega_p^2/(4 Delta), -Omega_s^2/(4 Delta) on |1>, |3>
  and a Raman coupling -(Omega_p Omega_s / (4 Delta)) <n'|D|n>.

Both are written in the frame rotating with the lasers, where |1,n> sits at
n * nu and |3,n> at n * nu - delta_2ph (delta_2ph = two-photon detuning), so
delta_2ph = +nu puts |1,n> and |3,n+1> in resonance (blue sideband).

The effective model is integrated in the interaction picture of that static
diagonal part, which leaves only the slow Raman dynamics and the off-resonant
sideband phases exp(i (k nu - delta_2ph) t). With ``sideband_rwa`` those
off-resonant couplings are dropped. Stored states are interaction-picture
states; populations are frame independent.
"""
from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .fockspace import CompositeState, Transition, TruncationWarning, lamb_dicke_element
from .integrate import IntegrationError, check_tol, exponential_integrate, rk_integrate

__all__ = [
    "SystemParams",
    "Trajectory",
    "BatchResult",
    "EffectiveModel",
    "FullModel",
    "build_full_hamiltonian",
    "build_effective_hamiltonian",
    "evolve",
    "evolve_batch",
    "transfer_efficiency",
    "product_columns",
    "default_grid",
    "IntegrationError",
]

TWO_PI = 2.0 * math.pi
LD_ORDER = 2  # Lamb-Dicke couplings kept for |n' - n| <= LD_ORDER
TOP_LEVEL_LIMIT = 1e-3
DEFAULT_TOL = 1e-11
# far-detuned exponential integration costs ~1/tol; 1e-6 is already converged
# to ~1e-6 in the transfer, far below the elimination error Omega/Delta
DEFAULT_TOL_FULL = 1e-6
MIN_DETUNING_RATIO = 20.0


@dataclass(frozen=True)
class SystemParams:
    delta: float = TWO_PI * 9.2e9
    two_photon_detuning: float = 0.0
    trap_frequency: float = TWO_PI * 2.2e6
    eta: float = 0.3
    n_max: int = 16
    electronic_levels: int = 2
    target_effective_rabi: float = TWO_PI * 100e3
    sideband_rwa: bool = True
    # full model only: run at Delta' = detuning_rescale * Omega_max (None = physical delta)
    detuning_rescale: float | None = 200.0

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.electronic_levels not in (2, 3):
            raise ValueError("electronic_levels must be 2 or 3")
        if self.n_max < 2:
            raise ValueError("n_max must be >= 2")
        if not 0.0 < self.eta < 1.0:
            raise ValueError("eta must lie in (0, 1)")
        if not self.delta > 0:
            raise ValueError("delta must be > 0")
        if not self.trap_frequency > 0:
            raise ValueError("trap_frequency must be > 0")
        if not self.target_effective_rabi > 0:
            raise ValueError("target_effective_rabi must be > 0")
        if self.detuning_rescale is not None and self.detuning_rescale < MIN_DETUNING_RATIO:
            raise ValueError(f"detuning_rescale must be >= {MIN_DETUNING_RATIO}")

    @property
    def sideband_order(self) -> int:
        return int(round(self.two_photon_detuning / self.trap_frequency))

    @property
    def transition(self) -> Transition | None:
        try:
            return Transition.from_order(self.sideband_order)
        except ValueError:
            return None

    def with_transition(self, transition) -> "SystemParams":
        k = Transition(transition).order
        return replace(self, two_photon_detuning=k * self.trap_frequency)

    @property
    def debye_waller(self) -> float:
        return math.exp(-self.eta**2 / 2)

    @property
    def rescaled(self) -> bool:
        return self.electronic_levels == 3 and self.detuning_rescale is not None

    def beam_rabi(self) -> float:
        """Balanced single-beam peak Rabi frequency.

        Chosen so that Omega^2 / (2 Delta_model) * e^{-eta^2/2} equals
        ``target_effective_rabi`` (carrier, n = 0, both beams at peak).
        """
        bare = self.target_effective_rabi / self.debye_waller
        if self.rescaled:
            return 2.0 * self.detuning_rescale * bare
        return math.sqrt(2.0 * self.delta * bare)

    def model_detuning(self) -> float:
        """One-photon detuning actually used by the model."""
        if self.rescaled:
            return self.detuning_rescale * self.beam_rabi()
        return self.delta

    def to_dict(self) -> dict:
        return asdict(self)


def _ld_matrix(n_max: int, eta: float, order: int = LD_ORDER) -> np.ndarray:
    d = np.zeros((n_max, n_max), dtype=complex)
    for n in range(n_max):
        for m in range(max(0, n - order), min(n_max, n + order + 1)):
            d[m, n] = lamb_dicke_element(m, n, eta)
    return d


class EffectiveModel:
    """Two-level (|1>, |3>) x Fock Raman model; basis index = level * n_max + n."""

    levels = (1, 3)

    def __init__(self, params: SystemParams, schedule):
        self.params = params
        self.schedule = schedule
        N = params.n_max
        self.n_max = N
        self.dim = 2 * N
        nu = params.trap_frequency
        d2 = params.two_photon_detuning
        self.gain = -1.0 / (4.0 * params.model_detuning())
        n = np.arange(N)
        self.energies = np.concatenate([n * nu, n * nu - d2])
        ld = _ld_matrix(N, params.eta)
        orders = range(-LD_ORDER, LD_ORDER + 1)
        if params.sideband_rwa:
            orders = [params.sideband_order] if abs(params.sideband_order) <= LD_ORDER else []
        self.bands = []
        for k in orders:
            lo, hi = max(0, -k), min(N, N - k)
            if hi <= lo:
                continue
            cols = np.arange(lo, hi)
            coeff = self.gain * ld[cols + k, cols]
            rows = slice(N + lo + k, N + hi + k)
            self.bands.append((k * nu - d2, coeff, rows, slice(lo, hi)))

    def _fields(self, t):
        op, os_ = self.schedule.rabi(t)
        return float(op), float(os_)

    def hmul(self, t: float, y: np.ndarray) -> np.ndarray:
        """H_I(t) @ y in the interaction picture; y is (dim,) or (dim, K)."""
        op, os_ = self._fields(t)
        N = self.n_max
        y2 = y if y.ndim == 2 else y[:, None]
        out = np.empty_like(y2)
        out[:N] = (self.gain * op * op) * y2[:N]
        out[N:] = (self.gain * os_ * os_) * y2[N:]
        pq = op * os_
        if pq != 0.0:
            for freq, coeff, rows, cols in self.bands:
                v = (pq * np.exp(1j * freq * t)) * coeff
                out[rows] += v[:, None] * y2[cols]
                out[cols] += v.conj()[:, None] * y2[rows]
        return out if y.ndim == 2 else out[:, 0]

    def interaction_hamiltonian(self, t: float) -> np.ndarray:
        return self.hmul(t, np.eye(self.dim, dtype=complex))

    def hamiltonian(self, t: float) -> np.ndarray:
        """Drive-frame Hamiltonian (static motional/detuning diagonal included)."""
        ph = np.exp(-1j * self.energies * t)
        h = self.interaction_hamiltonian(t)
        h = ph[:, None] * h * ph.conj()[None, :]
        h[np.diag_indices(self.dim)] += self.energies
        return h


class FullModel:
    """Three-level Lambda x Fock model; basis index = level * n_max + n, levels 1, 2, 3."""

    levels = (1, 2, 3)

    def __init__(self, params: SystemParams, schedule):
        self.params = params
        self.schedule = schedule
        N = params.n_max
        self.n_max = N
        self.dim = 3 * N
        self.detuning = params.model_detuning()
        omega = schedule.omega_max
        if omega > 0 and self.detuning < MIN_DETUNING_RATIO * omega:
            raise ValueError(
                f"full model needs delta >= {MIN_DETUNING_RATIO:g} x Omega_max "
                f"(delta = {self.detuning:.3e}, Omega_max = {omega:.3e} rad/s)"
            )
        nu = params.trap_frequency
        n = np.arange(N)
        self.diag = np.concatenate(
            [-self.detuning + n * nu, n * nu, -self.detuning - params.two_photon_detuning + n * nu]
        )
        self.pump_block = 0.5 * _ld_matrix(N, params.eta)  # rows |2,m>, cols |1,n>
        self.stokes_block = 0.5 * np.eye(N)

    def hamiltonian(self, t: float, shift: float = 0.0) -> np.ndarray:
        op, os_ = self.schedule.rabi(t)
        N = self.n_max
        h = np.zeros((self.dim, self.dim), dtype=complex)
        h[np.diag_indices(self.dim)] = self.diag + shift
        p = float(op) * self.pump_block
        s = float(os_) * self.stokes_block
        h[N : 2 * N, 0:N] = p
        h[0:N, N : 2 * N] = p.conj().T
        h[N : 2 * N, 2 * N :] = s
        h[2 * N :, N : 2 * N] = s.T
        return h


def _model(params: SystemParams, schedule):
    return FullModel(params, schedule) if params.electronic_levels == 3 else EffectiveModel(params, schedule)


def default_tol(params: SystemParams) -> float:
    return DEFAULT_TOL_FULL if params.electronic_levels == 3 else DEFAULT_TOL


def build_full_hamiltonian(params: SystemParams, schedule, t: float) -> np.ndarray:
    """Full 3N x 3N Hamiltonian at time ``t`` (drive frame, hbar = 1)."""
    if params.electronic_levels != 3:
        params = replace(params, electronic_levels=3)
    return FullModel(params, schedule).hamiltonian(t)


def build_effective_hamiltonian(params: SystemParams, schedule, t: float) -> np.ndarray:
    """Effective 2N x 2N Raman Hamiltonian at time ``t`` (drive frame)."""
    if params.electronic_levels != 2:
        params = replace(params, electronic_levels=2)
    return EffectiveModel(params, schedule).hamiltonian(t)


def default_grid(schedule, stride: float | None = None) -> np.ndarray:
    t0, t1 = schedule.window()
    if stride is None:
        base = getattr(schedule, "t_pulse", None) or (t1 - t0)
        stride = base / 200.0
    n = max(2, int(math.ceil((t1 - t0) / stride)) + 1)
    return np.linspace(t0, t1, n)


def _check_grid(grid, schedule):
    t0, t1 = schedule.window()
    g = np.asarray(grid, dtype=float)
    if g.ndim != 1 or g.size < 1 or np.any(np.diff(g) <= 0):
        raise ValueError("grid must be strictly increasing")
    if g[0] < t0 - 1e-15 or g[-1] > t1 + 1e-15:
        raise ValueError("grid must lie within the schedule window")
    return np.clip(g, t0, t1), (t0, t1)


@dataclass
class Trajectory:
    times: np.ndarray
    level_populations: np.ndarray  # (T, n_levels)
    fock_populations: np.ndarray  # (T, n_max)
    levels: tuple
    model: str
    states: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def population(self, level: int) -> np.ndarray:
        return self.level_populations[:, self.levels.index(level)]

    def to_csv(self, path, header_lines=()):
        with open(path, "w", newline="") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            w = csv.writer(fh)
            n_max = self.fock_populations.shape[1]
            w.writerow(["t_s"] + [f"P{lv}" for lv in self.levels] + [f"p_n{n}" for n in range(n_max)])
            for i, t in enumerate(self.times):
                w.writerow(
                    [repr(float(t))]
                    + [repr(float(x)) for x in self.level_populations[i]]
                    + [repr(float(x)) for x in self.fock_populations[i]]
                )

    def summary(self) -> dict:
        return {
            "model": self.model,
            "final_populations": {str(lv): float(p) for lv, p in zip(self.levels, self.level_populations[-1])},
            "transfer_efficiency": transfer_efficiency(self),
            "diagnostics": {k: (float(v) if np.isscalar(v) else v) for k, v in self.diagnostics.items()},
            "metadata": self.metadata,
        }

    def write_summary(self, path):
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)


def _as_initial(initial, n_levels: int, n_max: int):
    if isinstance(initial, CompositeState):
        if initial.dim != n_levels * n_max:
            raise ValueError(
                f"initial state has dimension {initial.dim}, model needs {n_levels * n_max}"
            )
        return (initial.vector, False) if initial.is_pure else (initial.density, True)
    arr = np.asarray(initial, dtype=complex)
    dim = n_levels * n_max
    if arr.shape == (dim,):
        return arr, False
    if arr.shape == (dim, dim):
        return arr, True
    raise ValueError(f"initial state must have shape ({dim},) or ({dim}, {dim})")


def _integrate(model, params, schedule, y0, grid, tol, density):
    t_span = schedule.window()
    if isinstance(model, FullModel):
        # global energy shift puts the ground manifold near zero; dynamics unchanged
        shift = model.detuning

        def ham(t):
            return model.hamiltonian(t, shift)

        return exponential_integrate(ham, y0, t_span, grid, tol, density=density)
    if density:

        def rhs(t, rho):
            return -1j * (model.hmul(t, rho) - model.hmul(t, rho.conj().T).conj().T)

    else:

        def rhs(t, y):
            return -1j * model.hmul(t, y)

    return rk_integrate(rhs, y0, t_span, grid, tol)


def evolve(
    initial,
    params: SystemParams,
    schedule,
    grid=None,
    tol: float | None = None,
    as_density: bool = False,
    store_states: bool = True,
) -> Trajectory:
    """Integrate the von Neumann equation d rho/dt = -i [H(t), rho].

    Pure initial states take the state-vector shortcut unless ``as_density``.
    The effective model uses adaptive Runge-Kutta (DOP853); the full
    three-level model uses the adaptive exponential midpoint integrator.
    ``tol=None`` picks 1e-11 (effective) or 1e-6 (full).
    """
    tol = check_tol(default_tol(params) if tol is None else tol)
    model = _model(params, schedule)
    n_levels, N = len(model.levels), params.n_max
    y0, density = _as_initial(initial, n_levels, N)
    if as_density and not density:
        y0, density = np.outer(y0, y0.conj()), True
    grid, _ = _check_grid(default_grid(schedule) if grid is None else grid, schedule)
    Y, work = _integrate(model, params, schedule, y0, grid, tol, density)

    if density:
        diag = np.real(np.einsum("tii->ti", Y))
        trace = np.real(np.einsum("tii->t", Y))
        purity = np.real(np.einsum("tij,tji->t", Y, Y))
        p0 = float(np.real(np.trace(y0 @ y0)))
        herm = float(np.max(np.abs(Y - np.conj(np.swapaxes(Y, 1, 2)))))
    else:
        diag = np.abs(Y) ** 2
        trace = diag.sum(axis=1)
        purity = trace**2
        p0 = 1.0
        herm = 0.0
    pops = diag.reshape(len(grid), n_levels, N)
    level_pops = pops.sum(axis=2)
    fock_pops = pops.sum(axis=1)
    top = float(fock_pops[:, -2:].max())
    diagnostics = {
        "trace_residual": float(np.max(np.abs(trace - 1.0))),
        "hermiticity_residual": herm,
        "purity_drift": float(np.max(np.abs(purity - p0))),
        "top_level_population": top,
        "work": work,
        "tol": tol,
    }
    _warn_top(top, N)
    return Trajectory(
        times=grid,
        level_populations=level_pops,
        fock_populations=fock_pops,
        levels=model.levels,
        model="full" if isinstance(model, FullModel) else "effective",
        states=Y if store_states else None,
        diagnostics=diagnostics,
        metadata=_metadata(params, schedule, model),
    )


def _warn_top(top: float, n_max: int):
    if top > TOP_LEVEL_LIMIT:
        warnings.warn(
            TruncationWarning(
                f"top two Fock levels reach population {top:.3g} (n_max={n_max}); raise n_max",
                "top_level_population",
                top,
                n_max,
            ),
            stacklevel=3,
        )


def _metadata(params, schedule, model) -> dict:
    md = {"params": params.to_dict(), "model_detuning_rad_s": float(model.params.model_detuning())}
    if params.rescaled:
        md["detuning_rescale"] = params.detuning_rescale
        md["physical_delta_rad_s"] = params.delta
    if hasattr(schedule, "to_dict"):
        md["schedule"] = schedule.to_dict()
    return md


@dataclass
class BatchResult:
    """Evolution of K pure initial states under one schedule.

    Single columns may legitimately start in the top Fock levels, so the
    truncation check is left to :meth:`mixed`, which knows the weights.
    """

    times: np.ndarray
    level_populations: np.ndarray  # (T, K, n_levels)
    fock_populations: np.ndarray  # (T, K, n_max)
    levels: tuple
    final_states: np.ndarray  # (dim, K)
    diagnostics: dict = field(default_factory=dict)

    def population(self, level: int) -> np.ndarray:
        return self.level_populations[:, :, self.levels.index(level)]

    def mixed(self, weights, warn: bool = True):
        """(level populations (T, n_levels), Fock populations (T, n_max)) of
        the incoherent mixture sum_k w_k |psi_k><psi_k|."""
        w = np.asarray(weights, dtype=float)
        levels = np.einsum("tkl,k->tl", self.level_populations, w)
        fock = np.einsum("tkn,k->tn", self.fock_populations, w)
        if warn:
            _warn_top(float(fock[:, -2:].max()), fock.shape[1])
        return levels, fock

    def mixture_diagnostics(self, weights) -> dict:
        """Trace and purity residuals of rho = sum_k w_k |psi_k><psi_k|.

        Columns start orthonormal, so tr(rho^2) starts at sum_k w_k^2; the
        final purity comes from the Gram matrix of the evolved columns.
        """
        w = np.asarray(weights, dtype=float)
        norms = self.level_populations.sum(axis=2)  # (T, K)
        gram = self.final_states.conj().T @ self.final_states
        purity = float(np.real(w @ (np.abs(gram) ** 2) @ w))
        return {
            "trace_residual": float(np.max(np.abs(norms @ w - w.sum()))),
            "purity_drift": abs(purity - float(w @ w)),
            "hermiticity_residual": 0.0,
        }

    def trajectory(self, k: int, model: str = "") -> Trajectory:
        return Trajectory(
            times=self.times,
            level_populations=self.level_populations[:, k],
            fock_populations=self.fock_populations[:, k],
            levels=self.levels,
            model=model,
            diagnostics=dict(self.diagnostics),
        )


def evolve_batch(
    params: SystemParams, schedule, columns: np.ndarray, grid=None, tol: float | None = None
) -> BatchResult:
    """Evolve each column of ``columns`` (dim x K) as an independent pure state.

    Mixtures of these initial states follow by linearity (unitary evolution).
    """
    tol = check_tol(default_tol(params) if tol is None else tol)
    model = _model(params, schedule)
    n_levels, N = len(model.levels), params.n_max
    cols = np.asarray(columns, dtype=complex)
    if cols.ndim != 2 or cols.shape[0] != n_levels * N:
        raise ValueError(f"columns must have shape ({n_levels * N}, K)")
    grid, _ = _check_grid(default_grid(schedule) if grid is None else grid, schedule)
    Y, work = _integrate(model, params, schedule, cols, grid, tol, False)
    P = np.abs(Y) ** 2  # (T, dim, K)
    pops = P.reshape(len(grid), n_levels, N, -1)
    level_pops = np.transpose(pops.sum(axis=2), (0, 2, 1))
    fock_pops = np.transpose(pops.sum(axis=1), (0, 2, 1))
    norms = P.sum(axis=1)
    return BatchResult(
        times=grid,
        level_populations=level_pops,
        fock_populations=fock_pops,
        levels=model.levels,
        final_states=Y[-1],
        diagnostics={
            "trace_residual": float(np.max(np.abs(norms - 1.0))),
            "purity_drift": float(np.max(np.abs(norms**2 - 1.0))),
            "hermiticity_residual": 0.0,
            "work": work,
            "tol": tol,
        },
    )


def product_columns(n_levels: int, n_max: int, level_index: int, fock_states) -> np.ndarray:
    """Columns |level> (x) |n> for each n in ``fock_states``."""
    fock_states = list(fock_states)
    cols = np.zeros((n_levels * n_max, len(fock_states)), dtype=complex)
    for k, n in enumerate(fock_states):
        if not 0 <= n < n_max:
            raise ValueError(f"Fock state {n} outside truncation {n_max}")
        cols[level_index * n_max + n, k] = 1.0
    return cols


def transfer_efficiency(traj: Trajectory, target_level: int = 3) -> float:
    """Population of ``target_level`` summed over Fock states at the final time."""
    return float(traj.population(target_level)[-1])
