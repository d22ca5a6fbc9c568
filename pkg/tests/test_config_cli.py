import json
import math
from pathlib import Path

import pytest

from ionstirap.cli import main
from ionstirap.config import ConfigError, load_config, parse_config, parse_quantity
from ionstirap.experiments import ExperimentKind
from ionstirap.pulses import Order

US = 1e-6
CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def test_parse_quantity_units():
    assert parse_quantity("120 us", "time", "x") == pytest.approx(120e-6)
    assert parse_quantity("2 ms", "time", "x") == pytest.approx(2e-3)
    assert parse_quantity("9.2 GHz", "freq", "x") == pytest.approx(2 * math.pi * 9.2e9)
    assert parse_quantity("1e3 rad_s", "freq", "x") == 1e3
    for bad in ("120", "120 furlongs", "us"):
        with pytest.raises(ConfigError):
            parse_quantity(bad, "time", "x")
    with pytest.raises(ConfigError):
        parse_quantity("1 MHz", "time", "x")


def test_minimal_config_defaults():
    cfg = parse_config({"experiment": "delay_scan"})
    assert cfg.spec.kind is ExperimentKind.DELAY_SCAN
    assert cfg.spec.t_pulse == pytest.approx(120 * US)
    assert len(cfg.hash) == 64


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError):
        parse_config({"experiment": "delay_scan", "bogus": 1})
    with pytest.raises(ConfigError):
        parse_config({"experiment": "delay_scan", "params": {"nope": 1}})
    with pytest.raises(ConfigError):
        parse_config({"experiment": "warp_drive"})
    with pytest.raises(ConfigError):
        parse_config({"experiment": "delay_scan", "sweep": {"s_factor": [0.1]}})


def test_signed_delay_sets_order():
    cfg = parse_config({"experiment": "map_2d", "schedule": {"t_pulse": "100 us", "t_delay": "-50 us"}})
    assert cfg.spec.order is Order.INTUITIVE
    assert cfg.spec.s_factor == pytest.approx(0.5)
    with pytest.raises(ConfigError):
        parse_config({"experiment": "map_2d", "schedule": {"t_delay": "-50 us", "order": "counter_intuitive"}})
    with pytest.raises(ConfigError):
        parse_config({"experiment": "map_2d", "schedule": {"s_factor": -0.3}})


def test_solver_tol_range():
    assert parse_config({"experiment": "delay_scan", "solver": {"tol": 1e-9}}).spec.tol == 1e-9
    with pytest.raises(ConfigError):
        parse_config({"experiment": "delay_scan", "solver": {"tol": 1e-3}})


def test_hash_stable_and_sensitive():
    a = parse_config({"experiment": "delay_scan", "schedule": {"t_pulse": "120 us"}})
    b = parse_config({"experiment": "delay_scan"})
    c = parse_config({"experiment": "delay_scan", "schedule": {"t_pulse": "100 us"}})
    assert a.hash == b.hash != c.hash
    assert a.with_tol(1e-9).hash != a.hash


def test_sweep_axis_table():
    cfg = parse_config(
        {"experiment": "delay_scan", "sweep": {"t_delay": {"start": "-10 us", "stop": "10 us", "step": "5 us"}}}
    )
    assert cfg.spec.axis("t_delay").values == pytest.approx((-10e-6, -5e-6, 0.0, 5e-6, 10e-6))


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.toml")), ids=lambda p: p.name)
def test_shipped_configs_load(path):
    load_config(path)


def test_cli_list(capsys):
    assert main(["list", "--json"]) == 0
    cat = json.loads(capsys.readouterr().out)
    assert {e["kind"] for e in cat} == {k.value for k in ExperimentKind}
    assert main(["list"]) == 0


def test_cli_check(capsys):
    assert main(["run", "--check", "--json"]) == 0
    rows = json.loads(capsys.readouterr().out)
    assert len(rows) == 10 and all(r["passed"] for r in rows)


def test_cli_config_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text('experiment = "delay_scan"\n[schedule]\nt_pulse = "12 parsecs"\n')
    assert main(["run", str(bad), "--out", str(tmp_path / "o")]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "config" and err["exit_status"] == 2
    assert main(["run"]) == 2


def test_cli_run_writes_outputs(tmp_path, monkeypatch):
    cfg = tmp_path / "scan.toml"
    cfg.write_text(
        'experiment = "delay_scan"\n[params]\nn_max = 4\n'
        '[sweep]\nt_delay = ["-80 us", "0 us", "80 us"]\n'
    )
    monkeypatch.setenv("IONSTIRAP_OUT", str(tmp_path / "env"))
    assert main(["run", str(cfg), "--jobs", "1"]) == 0
    out = tmp_path / "env"
    text = (out / "fig3a.csv").read_text().splitlines()
    assert text[0].startswith("# config_hash: ")
    manifest = json.loads((out / "run.json").read_text())
    assert manifest["failures"] == 0 and "fig3a.csv" in manifest["files"]
    assert (out / "fig3a.json").exists() and (out / "fig3a.gp").exists()
    # --out wins over the environment
    assert main(["run", str(cfg), "--jobs", "1", "--out", str(tmp_path / "flag")]) == 0
    assert (tmp_path / "flag" / "fig3a.csv").exists()


def test_cli_adiabaticity_run(tmp_path):
    assert main(["run", str(CONFIGS / "fig2.toml"), "--out", str(tmp_path)]) == 0
    md = json.loads((tmp_path / "fig2.json").read_text())
    assert set(md["violation_intervals_us"]) == {"30", "80", "130"}
