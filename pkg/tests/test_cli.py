import csv
import io
import json
import subprocess
import sys
from pathlib import Path

import pytest

import locdens.state
from locdens.cli import load_scenario, main
from locdens.selftest import run_selftest

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"

BASE = """\
model:
  mass: 1.0
  dim: 1
states:
  - {name: rest, p0: 0.0, sigma: 0.25}
  - {name: moving, p0: 2.0, sigma: 0.25}
mixtures:
  - name: pair
    components: [[0.5, rest], [0.5, moving]]
grids:
  spatial_points: 801
run:
  state: rest
  times: [0.0]
  regions: [[-1.0, 1.0]]
  tail_window: [4.0, 8.0]
"""


def run(*args, cwd=None):
    return subprocess.run([sys.executable, "-m", "locdens", *map(str, args)],
                          capture_output=True, text=True, cwd=cwd)


def read_table(path):
    lines = Path(path).read_text().splitlines()
    meta = [l for l in lines if l.startswith("#")]
    rows = list(csv.DictReader(io.StringIO("\n".join(l for l in lines if not l.startswith("#")))))
    return meta, rows


@pytest.fixture
def config(tmp_path):
    path = tmp_path / "scenario.yaml"
    path.write_text(BASE)
    return path


def test_density_table_and_normalization(config, tmp_path):
    out = tmp_path / "density.csv"
    proc = run("density", "--config", config, "--out", out)
    assert proc.returncode == 0, proc.stderr
    meta, rows = read_table(out)
    assert meta[0].startswith("# locdens ")
    assert meta[1] == "# command: density"
    assert list(rows[0]) == ["x", "t", "povm", "naive", "nw", "energy_raw"]
    x = [float(r["x"]) for r in rows]
    dx = (x[-1] - x[0]) / (len(x) - 1)
    for column in ("povm", "naive", "nw"):
        assert sum(float(r[column]) for r in rows) * dx == pytest.approx(1.0, abs=1e-6)


def test_config_is_echoed_with_defaults(config, tmp_path):
    out = tmp_path / "density.csv"
    assert run("density", "--config", config, "--out", out, "--resolution-scale", 2).returncode == 0
    meta, _ = read_table(out)
    echoed = json.loads(meta[2].removeprefix("# config: "))
    assert echoed["grids"]["momentum_nodes"] == 1024
    assert echoed["grids"]["spatial_points"] == 1602
    assert echoed["run"]["quantile"] == 0.1
    assert echoed["resolution_scale"] == 2.0


def test_output_is_byte_identical_across_runs(config, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run("density", "--config", config, "--out", a).returncode == 0
    assert run("density", "--config", config, "--out", b).returncode == 0
    assert a.read_bytes() == b.read_bytes()


def test_missing_mass_names_field_and_line(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text(BASE.replace("  mass: 1.0\n", ""))
    proc = run("density", "--config", path)
    assert proc.returncode == 2
    assert "model.mass" in proc.stderr
    assert "line 2" in proc.stderr


@pytest.mark.parametrize("edit, field", [
    (("sigma: 0.25}", "sigma: -1}"), "states.0"),
    (("dim: 1", "dim: 2"), "model.dim"),
    (("[0.5, moving]", "[0.5, nobody]"), "mixtures.0.components.1"),
    (("[0.5, moving]", "[0.6, moving]"), "mixtures.0"),
])
def test_invalid_fields_are_reported(tmp_path, edit, field):
    path = tmp_path / "bad.yaml"
    path.write_text(BASE.replace(*edit))
    proc = run("density", "--config", path)
    assert proc.returncode == 2
    assert field in proc.stderr


def test_unparseable_yaml(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("model: [unclosed\n")
    proc = run("density", "--config", path)
    assert proc.returncode == 2
    assert "line" in proc.stderr


def test_convexity_report(config, tmp_path):
    out = tmp_path / "convexity.csv"
    proc = run("convexity", "--config", config, "--out", out)
    assert proc.returncode == 0, proc.stderr
    _, rows = read_table(out)
    gaps = {r["prescription"]: float(r["value"]) for r in rows if r["record"] == "gap_l1"}
    assert gaps["povm"] <= 1e-12
    assert gaps["naive"] > 1e-3
    region = {r["prescription"]: r for r in rows if r["record"] == "region"}
    assert abs(float(region["povm"]["difference"])) <= 1e-12
    assert abs(float(region["naive"]["difference"])) > 1e-3
    energies = [float(r["value"]) for r in rows if r["record"] == "component_energy"]
    assert energies[1] / energies[0] > 2


def test_convexity_without_mixtures_is_config_error(tmp_path):
    path = tmp_path / "nomix.yaml"
    path.write_text(BASE.split("mixtures:")[0] + "grids:" + BASE.split("grids:")[1])
    proc = run("convexity", "--config", path)
    assert proc.returncode == 2
    assert "mixtures" in proc.stderr


def test_tails_within_bound(config, tmp_path):
    out = tmp_path / "tails.csv"
    proc = run("tails", "--config", config, "--out", out)
    assert proc.returncode == 0, proc.stderr
    _, rows = read_table(out)
    assert {r["prescription"] for r in rows} == {"povm", "naive"}
    assert all(r["holds"] == "true" for r in rows if r["state"] == "rest")


def test_tails_violation_exits_nonzero(tmp_path):
    path = tmp_path / "fast.yaml"
    path.write_text("model: {mass: 1.0, dim: 1}\nstates:\n  - {name: fast, p0: 5.0, sigma: 0.25}\n"
                    "run: {tail_window: [10.0, 20.0], prescriptions: [povm]}\n")
    proc = run("tails", "--config", path)
    assert proc.returncode == 1
    assert "bound violated" in proc.stderr
    assert "gamma_hat" in proc.stderr and "m + 3*stderr" in proc.stderr


def test_spread_report(tmp_path):
    path = tmp_path / "spread.yaml"
    path.write_text("model: {mass: 1.0, dim: 1}\nstates:\n  - {name: rest, p0: 0.0, sigma: 0.25}\n"
                    "run: {times: [1.0, 2.0], prescriptions: [povm]}\n")
    out = tmp_path / "spread.csv"
    proc = run("spread", "--config", path, "--out", out)
    assert proc.returncode == 0, proc.stderr
    _, rows = read_table(out)
    speeds = [float(r["speed"]) for r in rows if r["speed"]]
    assert len(speeds) == 2
    assert all(0 <= v <= 1.05 for v in speeds)


def test_compare_narrow_family(tmp_path):
    out = tmp_path / "compare.csv"
    proc = run("compare", "--config", SCENARIOS / "narrow_family.yaml", "--out", out)
    assert proc.returncode == 0, proc.stderr
    _, rows = read_table(out)
    l1 = [float(r["l1_naive_povm"]) for r in rows]
    assert all(b < a for a, b in zip(l1, l1[1:]))
    assert all(float(r["width_energy_product"]) > 0 for r in rows)


def test_selftest_passes():
    proc = run("selftest")
    assert proc.returncode == 0
    lines = [l for l in proc.stdout.splitlines() if l.startswith(("PASS", "FAIL"))]
    assert len(lines) >= 10
    assert all(l.startswith("PASS") for l in lines)


def test_selftest_detects_wrong_measure(monkeypatch, capsys):
    original = locdens.state.lorentz_measure
    monkeypatch.setattr(locdens.state, "lorentz_measure", lambda p, params: 1.1 * original(p, params))
    failed = {c.name for c in run_selftest() if not c.passed}
    assert "gaussian normalization constant vs adaptive quadrature" in failed
    assert {"povm normalization t=0", "newton-wigner normalization", "naive normalization"} <= failed
    assert main(["selftest"]) == 1
    assert "FAIL" in capsys.readouterr().out


def test_load_scenario_in_process():
    sc = load_scenario((SCENARIOS / "standard.yaml").read_text())
    assert set(sc.states) == {"rest", "moving"}
    assert sc.grids["momentum_nodes"] == 512


def test_shipped_scenarios_parse():
    for path in SCENARIOS.glob("*.yaml"):
        load_scenario(path.read_text())
