import json
import math

import numpy as np
import pytest

from ionstirap.dynamics import SystemParams
from ionstirap.experiments import (
    Axis,
    ExperimentKind,
    InitialSpec,
    SweepResult,
    SweepSpec,
    adiabaticity_traces,
    compare_rabi_stirap,
    default_spec,
    delay_scan,
    extract_p0,
    fock_dynamics,
    map_2d,
    moving_average,
    temperature_from_p0,
    thermal_pulse_length_scan,
)

US = 1e-6
SMALL = SystemParams(n_max=6)


def test_axis_validation():
    a = Axis.span("t", "s", 0.0, 1.0, 0.25)
    np.testing.assert_allclose(a.array, [0, 0.25, 0.5, 0.75, 1.0])
    with pytest.raises(ValueError):
        Axis("t", "s", (1.0, 0.5, 2.0))
    with pytest.raises(ValueError):
        Axis("t", "s", ())


def test_initial_spec():
    assert InitialSpec().target_level == 3
    assert InitialSpec(level=3).target_level == 1
    assert InitialSpec(fock=5).n_max(8) == 9
    assert InitialSpec(fock=None, mean_n=11.5).n_max(16) > 16
    with pytest.raises(ValueError):
        InitialSpec(fock=1, mean_n=1.0)
    with pytest.raises(ValueError):
        InitialSpec(level=2)


def test_sweep_spec_validation():
    ax = (Axis("t_delay", "s", (1e-5,)),)
    with pytest.raises(ValueError):
        SweepSpec("delay_scan", ax, s_factor=-0.1)
    with pytest.raises(ValueError):
        SweepSpec("delay_scan", ax, order="intuitive", truncated=True)
    with pytest.raises(KeyError):
        SweepSpec("delay_scan", ax).axis("nope")
    d = SweepSpec("delay_scan", ax).to_dict()
    assert json.dumps(d) and d["kind"] == "delay_scan"


def test_moving_average():
    np.testing.assert_allclose(moving_average([1, 2, 3, 4, 5], 3), [1, 2, 3, 4, 5])
    np.testing.assert_allclose(moving_average([0, 0, 3, 0, 0], 3), [0, 1, 1, 1, 0])
    np.testing.assert_allclose(moving_average([4.0, 1.0], 1), [4.0, 1.0])


def test_sweep_result_select_and_csv(tmp_path):
    r = SweepResult(
        "x",
        {"series": np.array(["a", "a", "b"]), "t_us": np.array([1.0, 2.0, 1.0])},
        np.array([0.1, 0.2, 1.5]),
        {"d": np.array([0.0, 0.0, 0.0])},
        ["ok", "ok", "ok"],
    )
    assert len(r.select(series="a")) == 2
    assert r.select(series="b", t_us=1.0).efficiency[0] == 1.5
    assert r.check_bounds() == [2]
    r.to_csv(tmp_path / "r.csv", ["h"])
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert lines[1] == "series,t_us,efficiency,d,status"
    with pytest.raises(ValueError):
        SweepResult("x", {"t": [1.0]}, np.array([0.1, 0.2]))


def test_delay_scan_symmetric_small():
    spec = SweepSpec("delay_scan", (Axis("t_delay", "s", (-80 * US, -40 * US, 40 * US, 80 * US)),), SMALL)
    r = delay_scan(spec, jobs=1)
    e = r.efficiency
    assert e[0] == pytest.approx(e[3], abs=1e-6)
    assert e[1] == pytest.approx(e[2], abs=1e-6)
    assert e[3] > 0.99
    np.testing.assert_allclose(r.column("s_factor"), [2 / 3, 1 / 3, 1 / 3, 2 / 3])
    assert not r.failed and not r.check_bounds()


def test_map_2d_small():
    spec = SweepSpec(
        "map_2d",
        (Axis("t_pulse", "s", (50 * US, 100 * US)), Axis("s_factor", "1", (0.2, 0.7))),
        SMALL,
        transitions=("carrier",),
    )
    r = map_2d(spec, jobs=1)
    assert len(r) == 4
    assert list(r.column("regime")) == ["rabi_oscillation", "adiabatic"] * 2
    assert r.select(t_pulse_us=100.0, s_factor=0.7).efficiency[0] > 0.99


def test_fock_dynamics_small():
    spec = SweepSpec(
        "fock_dynamics",
        (Axis("n", "1", (0, 1, 2)),),
        SMALL,
        t_pulse=100 * US,
        s_factor=0.4,
        transitions=("red_sideband",),
        options={"time_points": 21},
    )
    r, traj = fock_dynamics(spec)
    fe = r.metadata["final_efficiency"]
    assert fe["0"] < 1e-9
    assert fe["1"] > 0.95 and fe["2"] > 0.95
    assert len(traj) == 3 and len(r) == 63
    assert r.select(n=1).column("t_us")[0] == 0.0


def test_thermal_scan_small():
    spec = SweepSpec(
        "thermal_pulse_length_scan",
        (Axis("t_pulse", "s", (60 * US, 140 * US)),),
        SystemParams(),
        s_factor=0.5,
        truncated=True,
        initial=InitialSpec(1, None, 1.0),
    )
    r = thermal_pulse_length_scan(spec, jobs=1)
    assert len(r) == 6
    g = r.select(series="blue_sideband:ground").efficiency
    assert g[-1] > 0.95
    red = r.select(series="red_sideband:thermal").efficiency
    # red sideband cannot move the n = 0 share, about 1 / (nbar + 1) = 0.5
    assert np.all(red < 0.5 + 1e-3)
    assert r.metadata["thermal_mean_n"] == 1.0


def test_compare_small():
    spec = SweepSpec(
        "compare_rabi_stirap",
        (Axis.span("rabi_time", "s", 1 * US, 10 * US, 1 * US), Axis("transfer_time", "s", (150 * US,))),
        SMALL,
        s_factor=0.7,
        truncated=True,
        transitions=("carrier",),
    )
    r = compare_rabi_stirap(spec, jobs=1)
    rabi = r.select(arm="rabi")
    omega = SMALL.target_effective_rabi
    np.testing.assert_allclose(rabi.efficiency, np.sin(omega * rabi.column("time_us") * US / 2) ** 2, atol=1e-7)
    assert r.select(arm="stirap").efficiency[0] > 0.95
    assert r.metadata["rabi_max"]["time_us"] == pytest.approx(5.0)


def test_adiabaticity_traces_default():
    spec = default_spec("adiabaticity")
    traces = adiabaticity_traces(spec)
    assert sorted(traces) == [30 * US, 80 * US, 130 * US]
    for d, tr in traces.items():
        assert tr.violated.any()


def test_extract_p0_known_values():
    x = np.linspace(100, 160, 13) * US
    rng = np.random.default_rng(0)
    noise = rng.normal(0, 0.01, x.size)
    bsb = 0.4 + 0.08 + noise
    rsb = np.full(x.size, 0.4)
    p0, err = extract_p0((x, rsb), (x, bsb))
    sel = (x >= 120 * US - 1e-12) & (x <= 150 * US + 1e-12)
    assert p0 == pytest.approx(bsb[sel].mean() - 0.4, abs=1e-15)
    assert err == pytest.approx(bsb[sel].std(ddof=1) / math.sqrt(sel.sum()), rel=1e-12)
    with pytest.raises(ValueError):
        extract_p0((x, rsb), (x, bsb), window=(100 * US, 104 * US))
    with pytest.raises(ValueError):
        extract_p0((x[:-1], rsb[:-1]), (x, bsb))


def test_temperature_from_p0():
    nu, gamma = 2 * math.pi * 2.2e6, 2 * math.pi * 41.3e6
    t = temperature_from_p0(0.08, nu, gamma)
    assert t == pytest.approx(2 * nu / (gamma * math.log(1 + 1 / 11.5)), rel=1e-12)
    assert 1.1 < t < 1.5
    assert temperature_from_p0(1.0, nu, gamma) == 0.0
    with pytest.raises(ValueError):
        temperature_from_p0(0.0, nu, gamma)


def test_default_specs_build():
    for kind in ExperimentKind:
        spec = default_spec(kind)
        assert spec.kind is kind
