import json
import os

import numpy as np
import pytest

from revwillmore import cli
from revwillmore import generators as gen
from revwillmore.io import read_curve, read_table, write_curve
from revwillmore.minimize import MinimizeResult

CONFIGS = os.path.join(os.path.dirname(__file__), os.pardir, "configs")


def config(name):
    return os.path.join(CONFIGS, name + ".json")


def write_spec(tmp_path, spec, name="spec.json"):
    path = tmp_path / name
    path.write_text(json.dumps(spec))
    return str(path)


def run_cli(*argv):
    return cli.main([*map(str, argv), "--quiet"])


def load(path):
    with open(path) as fh:
        return json.load(fh)


def test_thresholds_degenerate(tmp_path):
    assert run_cli("thresholds", "--config", config("degenerate"), "--out", tmp_path) == 0
    rep = load(tmp_path / "thresholds.json")
    assert rep["c_ly_rot"] == pytest.approx(8 * np.pi, abs=1e-8)
    assert rep["c_ly"] == pytest.approx(8 * np.pi, abs=1e-8)
    assert (tmp_path / "bracket.svg").exists()


def test_thresholds_symmetric(tmp_path):
    assert run_cli("thresholds", "--config", config("symmetric"), "--out", tmp_path) == 0
    rep = load(tmp_path / "thresholds.json")
    assert rep["c_ly_rot"] == pytest.approx(4 * np.pi, abs=1e-6)
    assert rep["h_star"] == pytest.approx(0.0, abs=1e-5)


def test_malformed_config_names_the_field(tmp_path, capsys):
    spec = write_spec(tmp_path, {"boundary": {"p0": [0, 1], "p1": [1, "x"], "tau0": [1, 0], "tau1": [1, 0]}})
    assert run_cli("thresholds", "--config", spec, "--out", tmp_path / "o") == 1
    assert "boundary.p1" in capsys.readouterr().err
    spec = write_spec(tmp_path, {"initial": {"generator": "catenoid"}, "flow": {"dtt": 1}})
    assert run_cli("flow", "--config", spec, "--out", tmp_path / "o") == 1
    assert "flow.dtt" in capsys.readouterr().err
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run_cli("flow", "--config", bad, "--out", tmp_path / "o") == 1
    assert "line 1" in capsys.readouterr().err


def test_missing_initial_file(tmp_path, capsys):
    spec = write_spec(tmp_path, {"initial": {"file": str(tmp_path / "none.csv")}})
    assert run_cli("flow", "--config", spec, "--out", tmp_path / "o") == 1
    assert "initial.file" in capsys.readouterr().err


def test_flow_perturbed_cap(tmp_path):
    assert run_cli("flow", "--config", config("flow_perturbed_cap"), "--out", tmp_path) == 0
    header, data = read_table(tmp_path / "trace.csv")
    W = data[:, header.index("W")]
    assert np.all(np.diff(W) <= 1e-9)
    summary = load(tmp_path / "summary.json")
    assert summary["outcome"] == "Converged"
    for name in ("gate.json", "final_curve.csv", "W.svg", "L_hyp.svg", "min_height.svg"):
        assert (tmp_path / name).exists()


def test_flow_stationary_catenoid(tmp_path):
    assert run_cli("flow", "--config", config("flow_catenoid"), "--out", tmp_path) == 0
    assert load(tmp_path / "summary.json")["steps"] < 10


def test_flow_pinched_alarms(tmp_path):
    assert run_cli("flow", "--config", config("flow_pinched"), "--out", tmp_path) == 2
    summary = load(tmp_path / "summary.json")
    assert summary["outcome"] == "SingularitySuspected"
    d = summary["final"]
    assert d["min_height"] < 0.032 and d["verticality"] >= 0.9
    assert not load(tmp_path / "gate.json")["satisfied"]


def test_flow_from_curve_file(tmp_path):
    path = tmp_path / "cat.csv"
    write_curve(path, gen.catenoid(64))
    spec = write_spec(tmp_path, {"initial": {"file": str(path)}, "flow": {"N": 64, "scheme": "implicit"}})
    assert run_cli("flow", "--config", spec, "--out", tmp_path / "o") == 0


def test_max_steps_override(tmp_path):
    assert run_cli("flow", "--config", config("flow_perturbed_catenoid"), "--out", tmp_path,
                   "--max-steps", 2) == 3
    assert load(tmp_path / "summary.json")["outcome"] == "MaxSteps"


def test_minimize_cap(tmp_path):
    assert run_cli("minimize", "--config", config("minimize_cap"), "--out", tmp_path) == 0
    res = load(tmp_path / "result.json")
    assert res["verdict"] == "BelowThreshold" and not res["budget_exhausted"]
    assert read_curve(tmp_path / "final_curve.csv").N == 128


def test_minimize_without_certificate(tmp_path, monkeypatch):
    def at_threshold(boundary, init, budget):
        curve = gen.catenoid(16)
        return MinimizeResult(curve, 4.0, 0.0, "AtOrAbove", 0, threshold=4.0)

    monkeypatch.setattr(cli, "minimize_elastic", at_threshold)
    spec = write_spec(tmp_path, {"initial": {"generator": "catenoid"}})
    assert run_cli("minimize", "--config", spec, "--out", tmp_path) == 4
    assert load(tmp_path / "result.json")["verdict"] == "AtOrAbove"


def test_analyze_sphere(tmp_path):
    assert run_cli("analyze", "--config", config("analyze_sphere"), "--out", tmp_path) == 0
    out = load(tmp_path / "analyze.json")
    on, eq, off = out["profiles"]
    for p in (on, eq):
        assert p["monotonicity_defect"] <= 1e-4
        assert p["theta_hat"] == pytest.approx(1.0, abs=0.03)
        header, data = read_table(tmp_path / f"profile_{out['profiles'].index(p):03d}.csv")
        A = data[:, header.index("A")]
        assert np.all(np.abs(A / np.pi - 1) <= 0.02)
    assert off["theta_hat"] == 0.0
    assert out["li_yau"]["passes"]


def test_analyze_boundary_point_reports_error(tmp_path):
    assert run_cli("analyze", "--config", config("analyze_catenoid"), "--out", tmp_path) == 0
    out = load(tmp_path / "analyze.json")
    assert "SingularPoint" in out["profiles"][1]["error"]
    assert "theta_hat" in out["profiles"][0]
    assert (tmp_path / "A_z.svg").exists()


def test_caps(tmp_path):
    assert run_cli("caps", "--config", config("caps"), "--out", tmp_path) == 0
    out = load(tmp_path / "caps.json")
    assert out["count"] == 20 and out["max_diff"] <= 1e-2


def _tree(path):
    return {name: (path / name).read_bytes() for name in sorted(os.listdir(path))}


@pytest.mark.parametrize("command,name", [("flow", "flow_perturbed_cap"), ("thresholds", "degenerate"),
                                          ("caps", "caps"), ("minimize", "minimize_graph")])
def test_same_seed_same_bytes(tmp_path, command, name):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        run_cli(command, "--config", config(name), "--out", out, "--seed", 7)
    assert _tree(a) == _tree(b)


def test_seed_changes_perturbation(tmp_path):
    spec = write_spec(tmp_path, {"initial": {"generator": "perturbed"},
                                 "flow": {"N": 64, "scheme": "implicit", "max_steps": 1}})
    for seed in (1, 2):
        run_cli("flow", "--config", spec, "--out", tmp_path / str(seed), "--seed", seed)
    assert (tmp_path / "1" / "trace.csv").read_bytes() != (tmp_path / "2" / "trace.csv").read_bytes()


def test_curve_csv_round_trip(tmp_path):
    c = gen.perturbed_catenoid(64, 0.05)
    write_curve(tmp_path / "c.csv", c)
    back = read_curve(tmp_path / "c.csv")
    assert np.array_equal(back.nodes, c.nodes)


def test_out_path_is_a_file(tmp_path, capsys):
    f = tmp_path / "taken"
    f.write_text("")
    assert run_cli("caps", "--out", f) == 1
    assert "--out" in capsys.readouterr().err
