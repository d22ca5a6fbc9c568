import numpy as np
import pytest
from scipy.linalg import expm

from ionstirap.integrate import IntegrationError, check_tol, exponential_integrate, rk_integrate


def test_check_tol_range():
    assert check_tol(1e-8) == 1e-8
    for bad in (1e-13, 1e-5, 0.0):
        with pytest.raises(ValueError):
            check_tol(bad)


def test_rk_integrate_harmonic():
    h = np.array([[0.0, 1.0], [1.0, 0.0]])
    t = np.linspace(0, 3, 7)
    Y, nfev = rk_integrate(lambda _t, y: -1j * h @ y, np.array([1.0, 0.0]), (0, 3), t, 1e-12)
    np.testing.assert_allclose(np.abs(Y[:, 1]) ** 2, np.sin(t) ** 2, atol=1e-10)
    assert nfev > 0


def test_rk_integrate_matrix_state():
    h = np.diag([1.0, -2.0])
    y0 = np.eye(2, dtype=complex)
    Y, _ = rk_integrate(lambda _t, y: -1j * h @ y, y0, (0, 1), [0.0, 1.0], 1e-12)
    np.testing.assert_allclose(Y[-1], expm(-1j * h), atol=1e-10)


def test_exponential_matches_expm_time_dependent():
    # H(t) = sigma_x + t sigma_z; reference from a fine product of exponentials
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sz = np.diag([1.0, -1.0]).astype(complex)

    def ham(t):
        return sx + t * sz

    y0 = np.array([1.0, 0.0], dtype=complex)
    Y, steps = exponential_integrate(ham, y0, (0, 2), np.array([0.0, 1.0, 2.0]), 1e-10)
    ref = y0.copy()
    n = 20000
    dt = 2.0 / n
    for i in range(n):
        ref = expm(-1j * ham((i + 0.5) * dt) * dt) @ ref
    assert np.max(np.abs(Y[-1] - ref)) < 1e-7
    assert steps > 0
    assert np.linalg.norm(Y[-1]) == pytest.approx(1.0, abs=1e-12)


def test_exponential_density_matches_vector():
    sx = np.array([[0, 1], [1, 0]], dtype=complex)

    def ham(t):
        return np.cos(t) * sx

    psi = np.array([0.6, 0.8j])
    rho = np.outer(psi, psi.conj())
    t = np.linspace(0, 4, 5)
    Yv, _ = exponential_integrate(ham, psi, (0, 4), t, 1e-9)
    Yr, _ = exponential_integrate(ham, rho, (0, 4), t, 1e-9, density=True)
    np.testing.assert_allclose(Yr, np.einsum("ti,tj->tij", Yv, Yv.conj()), atol=1e-8)


def test_exponential_rejects_bad_grid():
    with pytest.raises(ValueError):
        exponential_integrate(lambda t: np.eye(2), np.ones(2), (0, 1), np.array([0.5, 0.2]), 1e-8)


def test_integration_error_message():
    e = IntegrationError("boom", 1.5, "try again")
    assert "t = 1.5" in str(e) and "try again" in str(e)
    assert e.time == 1.5
