import math
import warnings

import numpy as np
import pytest

from ionstirap.dynamics import (
    DEFAULT_TOL,
    DEFAULT_TOL_FULL,
    SystemParams,
    build_effective_hamiltonian,
    build_full_hamiltonian,
    default_grid,
    evolve,
    evolve_batch,
    product_columns,
    transfer_efficiency,
)
from ionstirap.fockspace import CompositeState, TruncationWarning, coupling_scale, make_thermal
from ionstirap.pulses import RabiDrive, schedule_from_delay

US = 1e-6


def rabi_run(params, n, t_frac=1.5, tol=1e-12):
    rate = params.target_effective_rabi * abs(
        coupling_scale(n, params.transition, params.eta) / params.debye_waller
    )
    om = params.beam_rabi()
    dur = t_frac * math.pi / rate
    grid = np.linspace(0, dur, 41)
    tr = evolve(CompositeState.product(0, n, 2, params.n_max), params, RabiDrive(om, om, dur), grid=grid, tol=tol)
    return tr, rate, grid


def test_params_validation():
    for bad in (
        dict(electronic_levels=4),
        dict(n_max=1),
        dict(eta=0.0),
        dict(delta=-1.0),
        dict(detuning_rescale=5.0),
    ):
        with pytest.raises(ValueError):
            SystemParams(**bad)


def test_params_transition_and_beam_rabi():
    p = SystemParams()
    assert p.transition.value == "carrier"
    b = p.with_transition("blue_sideband")
    assert b.sideband_order == 1 and b.two_photon_detuning == pytest.approx(p.trap_frequency)
    om = p.beam_rabi()
    assert om**2 / (2 * p.delta) * p.debye_waller == pytest.approx(p.target_effective_rabi, rel=1e-12)
    f = SystemParams(electronic_levels=3, detuning_rescale=200)
    assert f.model_detuning() == pytest.approx(200 * f.beam_rabi())
    assert f.beam_rabi() ** 2 / (2 * f.model_detuning()) * f.debye_waller == pytest.approx(
        f.target_effective_rabi, rel=1e-12
    )


@pytest.mark.parametrize("n", [0, 1, 3])
def test_carrier_rabi_oracle(n):
    p = SystemParams(n_max=8)
    tr, rate, grid = rabi_run(p, n)
    np.testing.assert_allclose(tr.population(3), np.sin(rate * grid / 2) ** 2, atol=1e-8)


@pytest.mark.parametrize("transition,n", [("blue_sideband", 0), ("blue_sideband", 2), ("red_sideband", 1)])
def test_sideband_rabi_oracle(transition, n):
    p = SystemParams(n_max=8).with_transition(transition)
    tr, rate, grid = rabi_run(p, n)
    np.testing.assert_allclose(tr.population(3), np.sin(rate * grid / 2) ** 2, atol=1e-8)
    m = n + (1 if transition == "blue_sideband" else -1)
    np.testing.assert_allclose(tr.fock_populations[:, m], tr.population(3), atol=1e-8)


def test_red_sideband_dark_in_ground_state():
    p = SystemParams(n_max=6).with_transition("red_sideband")
    om = p.beam_rabi()
    tr = evolve(CompositeState.product(0, 0, 2, 6), p, RabiDrive(om, om, 50 * US), tol=1e-12)
    assert tr.population(3).max() < 1e-12


def test_effective_couplings_from_full_model():
    # Raman block of the effective model equals -H_{3,2} H_{2,1} / Delta of the full model
    p = SystemParams(n_max=6, sideband_rwa=False, detuning_rescale=None)
    om = p.beam_rabi()
    sch = schedule_from_delay(100 * US, 60 * US, 0.7 * om, 1.3 * om)
    t = sch.midpoint + 7 * US
    N = p.n_max
    full = build_full_hamiltonian(p, sch, t)
    eff = build_effective_hamiltonian(p, sch, t)
    ref = -(full[2 * N :, N : 2 * N] @ full[N : 2 * N, :N]) / p.delta
    np.testing.assert_allclose(eff[N:, :N], ref, atol=1e-12 * np.abs(ref).max())
    np.testing.assert_allclose(eff, eff.conj().T, atol=1e-12 * np.abs(eff).max())
    assert full.shape == (3 * N, 3 * N)
    np.testing.assert_allclose(full, full.conj().T)


def test_full_model_rejects_small_detuning():
    p = SystemParams(n_max=4, electronic_levels=3, detuning_rescale=None, delta=1e6)
    sch = schedule_from_delay(100 * US, 80 * US, 1e6, 1e6)
    with pytest.raises(ValueError):
        evolve(CompositeState.product(0, 0, 3, 4), p, sch)


def test_stirap_pure_vs_density():
    p = SystemParams(n_max=6)
    om = p.beam_rabi()
    sch = schedule_from_delay(120 * US, 80 * US, om, om)
    psi = CompositeState.product(0, 0, 2, 6)
    grid = default_grid(sch)[::20]
    a = evolve(psi, p, sch, grid=grid)
    b = evolve(psi, p, sch, grid=grid, as_density=True)
    np.testing.assert_allclose(a.level_populations, b.level_populations, atol=1e-8)
    assert b.diagnostics["trace_residual"] < 1e-9
    assert b.diagnostics["hermiticity_residual"] < 1e-10
    assert b.diagnostics["purity_drift"] < 1e-8
    assert transfer_efficiency(a) > 0.99
    assert a.diagnostics["tol"] == DEFAULT_TOL


def test_batch_matches_thermal_density():
    p = SystemParams(n_max=10).with_transition("blue_sideband")
    om = p.beam_rabi()
    sch = schedule_from_delay(60 * US, 30 * US, om, om)
    dist = make_thermal(0.4, 10)
    grid = default_grid(sch)[::25]
    rho = evolve(CompositeState.mixed(0, dist, 2), p, sch, grid=grid)
    batch = evolve_batch(p, sch, product_columns(2, 10, 0, range(10)), grid=grid)
    w = dist.populations / dist.populations.sum()
    levels, fock = batch.mixed(w)
    np.testing.assert_allclose(levels, rho.level_populations, atol=1e-8)
    np.testing.assert_allclose(fock, rho.fock_populations, atol=1e-8)
    md = batch.mixture_diagnostics(w)
    assert md["trace_residual"] < 1e-9 and md["purity_drift"] < 1e-8
    assert batch.trajectory(0).population(3).shape == grid.shape


def test_top_level_warning():
    p = SystemParams(n_max=3).with_transition("blue_sideband")
    om = p.beam_rabi()
    with pytest.warns(TruncationWarning):
        evolve(CompositeState.product(0, 1, 2, 3), p, RabiDrive(om, om, 20 * US))


def test_grid_validation():
    p = SystemParams(n_max=4)
    om = p.beam_rabi()
    sch = schedule_from_delay(100 * US, 80 * US, om, om)
    psi = CompositeState.product(0, 0, 2, 4)
    with pytest.raises(ValueError):
        evolve(psi, p, sch, grid=[0.0, -1.0])
    with pytest.raises(ValueError):
        evolve(psi, p, sch, grid=[sch.window()[1] + 1e-6])
    with pytest.raises(ValueError):
        evolve(CompositeState.product(0, 0, 2, 5), p, sch)
    with pytest.raises(ValueError):
        evolve(psi, p, sch, tol=1e-3)


def test_full_model_agrees_with_effective():
    eff = SystemParams(n_max=4, sideband_rwa=False)
    full = SystemParams(n_max=4, electronic_levels=3, detuning_rescale=100)
    out = []
    for p in (eff, full):
        om = p.beam_rabi()
        sch = schedule_from_delay(120 * US, 80 * US, om, om)
        grid = np.linspace(*sch.window(), 3)
        tr = evolve(CompositeState.product(0, 0, p.electronic_levels, 4), p, sch, grid=grid)
        out.append(transfer_efficiency(tr))
    assert tr.diagnostics["tol"] == DEFAULT_TOL_FULL
    assert tr.model == "full"
    assert abs(out[0] - out[1]) < 1e-3


def test_trajectory_outputs(tmp_path):
    p = SystemParams(n_max=4)
    om = p.beam_rabi()
    sch = schedule_from_delay(100 * US, 80 * US, om, om)
    tr = evolve(CompositeState.product(0, 0, 2, 4), p, sch, grid=np.linspace(*sch.window(), 5))
    tr.to_csv(tmp_path / "t.csv", ["x=1"])
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[1] == "t_s,P1,P3,p_n0,p_n1,p_n2,p_n3"
    assert len(lines) == 7
    tr.write_summary(tmp_path / "s.json")
    import json

    s = json.loads((tmp_path / "s.json").read_text())
    assert s["transfer_efficiency"] == pytest.approx(transfer_efficiency(tr))
    assert s["metadata"]["params"]["n_max"] == 4
