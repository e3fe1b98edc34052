import io
import json
import subprocess
import sys

import numpy as np
import pytest

from topodetect import __version__
from topodetect.cli import main, simulate_scenario
from topodetect.detector import SamplePlan, detect, observability_matrix
from topodetect.discern import SensorSet
from topodetect.io import (
    FormatError,
    dump_report,
    graph_to_dict,
    load_graph,
    load_scenario,
    samples_from_csv,
    samples_from_json,
    samples_to_csv,
    samples_to_json,
)
from topodetect.model import NetworkModel, VariationSpec, apply_variation
from topodetect.spectral import spectral_decompose

K3 = {"n": 3, "edges": [[1, 2], [2, 3], [1, 3]], "consensus": True}


def run(*argv):
    out = io.StringIO()
    code = main([str(a) for a in argv], out=out)
    return code, out.getvalue()


def write(path, obj):
    path.write_text(json.dumps(obj))
    return path


@pytest.fixture
def scenario(tmp_path):
    return write(tmp_path / "scenario.json", {
        "format": 1,
        "network": {"n": 4, "edges": [[1, 2], [2, 3], [3, 4], [1, 3]], "consensus": True},
        "variations": ["link-reconfig:1,3", "node:4"],
        "sensors": [1, 2],
        "plan": {"t0": 0.0, "T": 0.5, "N": 8},
        "noise": 0.0,
        "x0": [1.0, -2.0, 0.5, 3.0],
    })


# --- formats ------------------------------------------------------------------

def test_graph_roundtrip(tmp_path):
    model = NetworkModel.from_edges(3, [(1, 2, 0.5), (2, 3, 2.0)], [-1.0, 0.0, 0.25])
    path = write(tmp_path / "g.json", graph_to_dict(model))
    assert load_graph(path) == model


def test_consensus_flag_ignores_weights():
    model = load_graph({"n": 3, "edges": [[1, 2, 7.0], [2, 3]], "consensus": True})
    assert model.weights == (1.0, 1.0) and model.diag == (-1.0, -2.0, -1.0)


def test_graph_errors_carry_location(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"n": 3,\n "edges": [[1, 2],]}')
    with pytest.raises(FormatError, match=r"bad\.json:2:"):
        load_graph(bad)
    with pytest.raises(FormatError):
        load_graph({"edges": []})
    with pytest.raises(FormatError):
        load_graph({"n": 3, "edges": [[1, 1]]})


def test_scenario_validation(tmp_path, scenario):
    sc = load_scenario(scenario)
    assert sc.plan == SamplePlan(0.0, 0.5, 8)
    assert sc.variations[0] == VariationSpec.link(1, 3, reconfig=True)
    data = json.loads(scenario.read_text())
    for key, value in (("format", 2), ("variations", ["link:2,4"]), ("sensors", [9]),
                       ("x0", [1.0]), ("noise", -1.0)):
        broken = dict(data, **{key: value})
        with pytest.raises(FormatError):
            load_scenario(write(tmp_path / "b.json", broken))


def test_samples_csv_roundtrip():
    rng = np.random.default_rng(1)
    plan = SamplePlan(0.0, 0.1, 4)
    sensors = SensorSet((2, 5))
    from topodetect.detector import SampleBatch

    batch = SampleBatch(rng.standard_normal((4, 2)), 0.1, sensors, plan)
    text = samples_to_csv(batch)
    assert text.splitlines()[0] == "k,node,value"
    back = samples_from_csv(text, sensors, plan, 0.1)
    assert np.array_equal(back.Z, batch.Z)
    back = samples_from_json(samples_to_json(batch))
    assert np.array_equal(back.Z, batch.Z) and back.energy == 0.1
    with pytest.raises(FormatError, match=":3:"):
        samples_from_csv("k,node,value\n0,2,1.0\n0,x,2\n", sensors, plan, 0.1)
    with pytest.raises(FormatError, match="missing"):
        samples_from_csv("k,node,value\n0,2,1.0\n", sensors, plan, 0.1)


def test_report_precision_and_metadata():
    text = dump_report({"x": 1 / 3, "arr": np.array([2 / 3])}, {"tol": 1e-8})
    data = json.loads(text)
    assert data["version"] == __version__ and data["tolerances"] == {"tol": 1e-8}
    assert data["x"] == float("0.333333333333333")


# --- commands -----------------------------------------------------------------

def test_analyze_triangle(tmp_path):
    g = write(tmp_path / "k3.json", K3)
    code, out = run("analyze", "--graph", g, "--variation", "link-reconfig:1,2", "--json")
    assert code == 0
    rep = json.loads(out)
    assert rep["variations"][0]["dim_indiscernible"] == 2
    assert "tolerances" in rep and rep["version"] == __version__


def test_analyze_all_variations_and_sensors(tmp_path):
    g = write(tmp_path / "k3.json", K3)
    code, out = run("analyze", "--graph", g, "--sensors", "3", "--json")
    rep = json.loads(out)
    assert code == 0 and len(rep["variations"]) == 3 + 3 + 3 + 3
    assert all("output" in v for v in rep["variations"])
    code, out = run("analyze", "--graph", g)
    assert code == 0 and "dim I" in out


def test_analyze_path_reports_mode(tmp_path):
    g = write(tmp_path / "p8.json", {"n": 8, "edges": [[i, i + 1] for i in range(1, 8)],
                                      "consensus": True})
    code, out = run("analyze", "--graph", g, "--variation", "link-reconfig:5,4", "--json")
    rep = json.loads(out)["variations"][0]
    modes = sorted(s["path_mode"] for s in rep["shared_eigenvalues"] if s["dim_common"])
    assert modes == [0, 2, 4, 6]


def test_analyze_rejects_noop(tmp_path, capsys):
    g = write(tmp_path / "k3.json", {"n": 3, "edges": [[1, 2], [2, 3]], "consensus": True})
    code, _ = run("analyze", "--graph", g, "--variation", "link:1,3")
    assert code == 1
    assert "not an edge" in capsys.readouterr().err


def test_sensors_exit_codes(tmp_path):
    g = write(tmp_path / "p8.json", {"n": 8, "edges": [[i, i + 1] for i in range(1, 8)],
                                      "consensus": True})
    code, out = run("sensors", "--graph", g, "--variation", "link-reconfig:4,5", "--budget", 1)
    assert code == 2 and "infeasible" in out
    code, out = run("sensors", "--graph", g, "--variation", "link-reconfig:4,5", "--budget", 3,
                    "--json")
    rep = json.loads(out)
    assert code == 0 and rep["feasible"] and len(rep["sensors"]) == rep["lower_bound"] == 2
    code, out = run("sensors", "--graph", g, "--variation", "node:1", "--budget", 8,
                    "--restrict", "2,3,4,5,6,7,8", "--json")
    assert code == 0 and json.loads(out)["restrict"] == [2, 3, 4, 5, 6, 7, 8]


def test_simulate_detect_roundtrip(tmp_path, scenario):
    csv_path = tmp_path / "s.csv"
    code, _ = run("simulate", scenario, "--seed", 5, "--Ev", 0.05, "-o", csv_path)
    assert code == 0
    code, out = run("detect", scenario, csv_path, "--Ev", 0.05, "--json")
    cli = json.loads(out)["reports"]

    sc = load_scenario(scenario)
    from dataclasses import replace

    sc = replace(sc, noise=0.05)
    batch = simulate_scenario(sc, seed=5)
    e = spectral_decompose(sc.network.to_dense())
    for rep, spec in zip(cli, sc.variations):
        ebar = spectral_decompose(apply_variation(sc.network, spec).to_dense())
        ref = detect(batch, observability_matrix(e, sc.sensors, sc.plan),
                     observability_matrix(ebar, sc.sensors, sc.plan), 0.05)
        assert abs(rep["pi"] - ref.pi) <= 1e-12
        assert abs(rep["pi_bar"] - ref.pi_bar) <= 1e-12
        assert rep["verdict"] == ref.verdict.value
    assert code in (0, 3)


def test_simulate_deterministic_and_json(tmp_path, scenario):
    _, a = run("simulate", scenario, "--seed", 3, "--Ev", 0.1)
    _, b = run("simulate", scenario, "--seed", 3, "--Ev", 0.1)
    _, c = run("simulate", scenario, "--seed", 4, "--Ev", 0.1)
    assert a == b and a != c
    _, j = run("simulate", scenario, "--json", "--N", 3, "--sensors", "4")
    data = json.loads(j)
    assert data["sensors"] == [4] and len(data["samples"]) == 3


def test_noise_free_nominal_detect(tmp_path, scenario):
    path = tmp_path / "s.json"
    run("simulate", scenario, "--json", "-o", path)
    code, out = run("detect", scenario, path, "--json")
    for rep in json.loads(out)["reports"]:
        assert rep["pi"] == 0.0
        assert rep["verdict"] in ("nominal-only", "inconclusive")
        assert rep["sampling_ok"]


def test_switch_to_detected(tmp_path, scenario):
    path = tmp_path / "s.csv"
    run("simulate", scenario, "--switch-to", "node:4", "-o", path)
    code, out = run("detect", scenario, path)
    assert code == 0
    assert "node:4" in out and "variation-detected" in out


def test_inconclusive_exit_code(tmp_path):
    # x0 = 1 is indiscernible under any reconfiguring variation
    sc = write(tmp_path / "sc.json", {
        "format": 1, "network": K3, "variations": ["link-reconfig:1,2"], "sensors": [1],
        "plan": {"T": 0.3, "N": 6}, "noise": 0.0, "x0": [1.0, 1.0, 1.0]})
    path = tmp_path / "s.csv"
    run("simulate", sc, "-o", path)
    code, out = run("detect", sc, path, "--json")
    assert code == 3
    assert json.loads(out)["reports"][0]["verdict"] == "inconclusive"


def test_path_demo():
    code, out = run("path-demo", "--n-max", 10)
    rows = {tuple(int(v) for v in line.split()) for line in out.splitlines()[1:]}
    assert code == 0 and (2, 4, 8, 1) in rows and (8, 5, 10, 4) in rows
    _, j = run("path-demo", "--n-max", 8, "--json")
    assert [2, 4, 8, 1] in json.loads(j)["rows"]


def test_missing_file(tmp_path, capsys):
    code, _ = run("analyze", "--graph", tmp_path / "nope.json")
    assert code == 1 and "file not found" in capsys.readouterr().err


def test_console_script():
    out = subprocess.run([sys.executable, "-m", "topodetect.cli", "path-demo", "--n-max", "4"],
                         capture_output=True, text=True)
    assert out.returncode == 0 and "k" in out.stdout.splitlines()[0]
