"""Time integrators for dy/dt = -i H(t) y and d rho/dt = -i [H(t), rho].

Two routes:

* :func:`rk_integrate` - adaptive explicit Runge-Kutta (Dormand-Prince 8(5,3)
  from scipy) for slowly varying generators.
* :func:`exponential_integrate` - adaptive exponential midpoint rule,
  U = exp(-i H(t + dt/2) dt), with step-doubling error control. Each step is
  exactly unitary and the fast static part of H is propagated exactly, which is
  what makes the far-detuned three-level model tractable.

  Steps are only in the asymptotic regime when Delta * dt << 1. For far
  detuned systems the cost therefore grows roughly like 1/tol; tolerances
  around 1e-6 to 1e-7 are the practical range there.
"""
from __future__ import annotations

import numpy as np
from scipy.integrate import solve_ivp

__all__ = ["IntegrationError", "rk_integrate", "exponential_integrate"]

TOL_RANGE = (1e-12, 1e-6)


class IntegrationError(RuntimeError):
    def __init__(self, message: str, time: float | None = None, suggestion: str = ""):
        full = message
        if time is not None:
            full += f" (t = {time:.6e} s)"
        if suggestion:
            full += f"; {suggestion}"
        super().__init__(full)
        self.time = time
        self.suggestion = suggestion


def check_tol(tol: float) -> float:
    lo, hi = TOL_RANGE
    if not lo <= tol <= hi:
        raise ValueError(f"tol must lie in [{lo:g}, {hi:g}], got {tol:g}")
    return float(tol)


def rk_integrate(rhs, y0: np.ndarray, t_span, t_eval, tol: float):
    """Integrate ``y' = rhs(t, y)`` for complex ``y`` of any shape.

    Returns (Y, nfev) with Y of shape (len(t_eval),) + y0.shape.
    """
    shape = y0.shape

    def flat(t, y):
        return rhs(t, y.reshape(shape)).ravel()

    sol = solve_ivp(
        flat,
        t_span,
        y0.ravel().astype(complex),
        method="DOP853",
        t_eval=t_eval,
        rtol=tol,
        atol=tol,
    )
    if sol.status != 0:
        tfail = float(sol.t[-1]) if sol.t.size else float(t_span[0])
        raise IntegrationError(
            f"Runge-Kutta integration failed: {sol.message}",
            tfail,
            "step size underflow usually means the detuning is too large for an explicit "
            "scheme; rescale the detuning or use the exponential integrator",
        )
    Y = sol.y.T.reshape((len(sol.t),) + shape)
    return Y, int(sol.nfev)


def _propagator(h: np.ndarray, dt: float) -> np.ndarray:
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w * dt)) @ v.conj().T


def exponential_integrate(
    hamiltonian,
    y0: np.ndarray,
    t_span,
    t_eval,
    tol: float,
    density: bool = False,
    first_step: float | None = None,
    min_step: float | None = None,
):
    """Adaptive exponential midpoint integration.

    ``hamiltonian(t)`` returns a dense Hermitian matrix. ``y0`` is a state
    vector, a batch of column vectors, or (``density=True``) a density matrix.
    The local error of a step is estimated by comparing one step of size dt
    against two of size dt/2 and the more accurate two-step result is kept.

    Returns (Y, n_steps) with Y sampled at ``t_eval``.
    """
    t0, t1 = map(float, t_span)
    t_eval = np.asarray(t_eval, dtype=float)
    if t_eval[0] < t0 or t_eval[-1] > t1 or np.any(np.diff(t_eval) <= 0):
        raise ValueError("t_eval must be increasing and inside t_span")
    span = t1 - t0
    dt_prop = first_step or span / 2000.0
    min_step = min_step or span * 1e-12

    def apply(u, y):
        return u @ y @ u.conj().T if density else u @ y

    y = np.array(y0, dtype=complex)
    out = np.empty((t_eval.size,) + y.shape, dtype=complex)
    k = 0
    t = t0
    while k < t_eval.size and t_eval[k] <= t:
        out[k] = y
        k += 1
    steps = 0
    while k < t_eval.size:
        target = t_eval[k]
        dt = min(dt_prop, target - t)
        full = apply(_propagator(hamiltonian(t + 0.5 * dt), dt), y)
        half = apply(_propagator(hamiltonian(t + 0.25 * dt), 0.5 * dt), y)
        half = apply(_propagator(hamiltonian(t + 0.75 * dt), 0.5 * dt), half)
        err = np.max(np.abs(half - full)) / 3.0
        fac = 2.0 if err == 0 else min(2.0, max(0.2, 0.9 * (tol / err) ** (1.0 / 3.0)))
        if err <= tol:
            y = half
            t = target if dt == target - t else t + dt
            steps += 1
            if t >= target:
                out[k] = y
                k += 1
            # a step clipped to an output time says nothing about the next size
            if dt == dt_prop or fac < 1.0:
                dt_prop = dt * fac
        else:
            dt_prop = dt * fac
        if dt_prop < min_step:
            raise IntegrationError(
                "exponential integrator step size underflow",
                t,
                "the generator varies too fast for the tolerance; loosen tol",
            )
    return out, steps
