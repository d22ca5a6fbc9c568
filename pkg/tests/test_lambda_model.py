import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ionstirap.lambda_model import (
    REGIME_THRESHOLD,
    Regime,
    adiabaticity_trace,
    classify_regime,
    dark_state_splitting,
    dressed_states,
    eigenfrequencies,
    hamiltonian,
    mixing_angle,
)
from ionstirap.pulses import make_stirap_schedule

US = 1e-6


def test_hamiltonian_layout():
    h = hamiltonian(2.0, 4.0, 10.0)
    expected = 0.5 * np.array([[-20, 2, 0], [2, 0, 4], [0, 4, -20]])
    np.testing.assert_allclose(h, expected)
    assert np.allclose(h, h.conj().T)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.01, 10), st.floats(0.01, 10), st.floats(-100, 100))
def test_eigenfrequencies_shifted_spectrum(op, os_, delta):
    num = np.linalg.eigvalsh(hamiltonian(op, os_, delta))
    ref = np.sort(np.array(eigenfrequencies(op, os_, delta)) - delta)
    np.testing.assert_allclose(num, ref, atol=1e-10 * (abs(delta) + op + os_))


def test_dark_state_is_exact_eigenvector():
    op, os_, delta = 0.3, 0.7, 20.0
    a0, _, _ = dressed_states(mixing_angle(op, os_))
    h = hamiltonian(op, os_, delta)
    np.testing.assert_allclose(h @ a0, -delta * a0, atol=1e-14)


def test_dark_state_splitting_no_cancellation():
    op, os_, delta = 1.0, 1.0, 1e9
    direct = abs(0.5 * (delta - np.sqrt(delta**2 + 2)))
    assert dark_state_splitting(op, os_, delta) == pytest.approx(2 / (4 * delta), rel=1e-9)
    assert direct < 1e-6  # the naive form loses everything here


def test_mixing_angle_limits():
    assert mixing_angle(0.0, 1.0) == 0.0
    assert mixing_angle(1.0, 0.0) == pytest.approx(np.pi / 2)
    assert mixing_angle(1.0, 1.0) == pytest.approx(np.pi / 4)
    with pytest.raises(ValueError):
        mixing_angle(0.0, 0.0)


def test_dressed_states_orthonormal():
    for th in np.linspace(0, np.pi / 2, 7):
        m = np.array(dressed_states(th))
        np.testing.assert_allclose(m @ m.T, np.eye(3), atol=1e-15)


def test_classify_regime():
    assert classify_regime(0.7) is Regime.ADIABATIC
    assert classify_regime(REGIME_THRESHOLD) is Regime.ADIABATIC
    assert classify_regime(0.3) is Regime.RABI_OSCILLATION
    with pytest.raises(ValueError):
        classify_regime(-0.1)


def test_trace_coupling_matches_finite_difference():
    s = make_stirap_schedule(100 * US, 0.8, omega_p_max=1e7, omega_s_max=1e7)
    t = np.linspace(*s.window(), 4001)[1000:3000]
    tr = adiabaticity_trace(s, 1e9, grid=t)
    theta = mixing_angle(*s.rabi(t))
    fd = np.gradient(theta, t)
    np.testing.assert_allclose(tr.coupling[5:-5], np.abs(fd)[5:-5], rtol=1e-4, atol=1.0)


def test_trace_violation_flags_and_csv(tmp_path):
    s = make_stirap_schedule(100 * US, 0.3, omega_p_max=5e7, omega_s_max=5e7)
    tr = adiabaticity_trace(s, 2 * np.pi * 9.2e9)
    assert np.array_equal(tr.violated, tr.splitting < 10 * tr.coupling)
    assert tr.violation_intervals
    assert tr.times[0] == tr.violation_intervals[0][0]
    out = tmp_path / "trace.csv"
    tr.to_csv(out, ["hello"])
    lines = out.read_text().splitlines()
    assert lines[0] == "# hello" and lines[1].startswith("t_s,")
    assert len(lines) == 2 + tr.times.size


def test_trace_rejects_degenerate():
    s = make_stirap_schedule(100 * US, 0.5, omega_p_max=0.0, omega_s_max=0.0)
    with pytest.raises(ValueError):
        adiabaticity_trace(s, 1e9)
    s = make_stirap_schedule(100 * US, 0.5, omega_p_max=1.0, omega_s_max=1.0)
    with pytest.raises(ValueError):
        adiabaticity_trace(s, 1e9, grid=[1.0, 0.5])
    with pytest.raises(ValueError):
        adiabaticity_trace(s, 1e9, ratio_threshold=0)
