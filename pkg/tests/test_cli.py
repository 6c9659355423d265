import json
import subprocess
import sys

import numpy as np
import pytest

from supercoherence._io import read_csv
from supercoherence.cli import main
from supercoherence.errors import ParseError
from supercoherence.netspec import parse_network_spec


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_network_spec_examples():
    spec = parse_network_spec("all")
    assert spec.family == "all" and spec.sign.value == -1
    spec = parse_network_spec("ws:k=4,p=1")
    assert spec.params == {"k": 4, "p": 1.0}
    with pytest.raises(ParseError) as err:
        parse_network_spec("ws:k=3,p=0.5")
    assert err.value.position == 5
    assert parse_network_spec("lattice:d=10x10,periodic=false").params == {"d": [10, 10], "periodic": False}
    assert parse_network_spec("er:p=0.1,sign=+").sign.value == 1
    for bad in ("", "tree:n=2", "er:p=2", "er:q=0.1", "lattice:periodic=true", "ba:m=x"):
        with pytest.raises(ParseError):
            parse_network_spec(bad)


def test_selfconsistent_json(capsys):
    code, out, _ = _run(capsys, "selfconsistent", "--dist", "lorentz", "--sigma", "0.4", "--theta0", "1.5708",
                        "--r0", "1", "--format", "json")
    assert code == 0
    doc = json.loads(out)
    assert doc["r"] == pytest.approx(0.6, abs=1e-4)
    assert abs(doc["delta"]) < 1e-4 and doc["phase"] == "supercoherent"


def test_spectrum_outputs(tmp_path, capsys):
    out = tmp_path / "spec.csv"
    code, _, _ = _run(capsys, "spectrum", "--n", "1000", "--dist", "uniform", "--sigma", "0.1", "--network", "all",
                      "--scheme", "stratified", "--out", str(out))
    assert code == 0
    meta, cols, rows = read_csv(out)
    assert cols == ["k", "E_k", "w_k"] and len(rows) == 1000
    side = json.loads((tmp_path / "spec.csv.json").read_text())
    assert side["gap"] == pytest.approx(0.837, abs=0.01)
    assert side["config"]["sigma"] == 0.1


def test_dynamics_roundtrip(tmp_path, capsys):
    out = tmp_path / "tr.csv"
    code, _, _ = _run(capsys, "dynamics", "--n", "200", "--sigma", "0.5", "--tmax", "20", "--out", str(out),
                      "--svg", str(tmp_path / "tr.svg"))
    assert code == 0
    meta, cols, rows = read_csv(out)
    assert cols == ["t", "eta"]
    assert meta["config"]["n"] == 200 and "seed" in meta["config"] and meta["version"]
    assert (tmp_path / "tr.svg").read_text().lstrip().startswith("<?xml")


def test_json_roundtrip_full_precision(tmp_path, capsys):
    from supercoherence import FrequencyDistribution, run_coherent, sample

    out = tmp_path / "tr.json"
    assert _run(capsys, "dynamics", "--n", "100", "--sigma", "0.3", "--tmax", "5", "--format", "json",
                "--out", str(out))[0] == 0
    doc = json.loads(out.read_text())
    ref = run_coherent(sample(FrequencyDistribution("uniform", 0.3), 100), t_max=5, record_stride=10)
    np.testing.assert_allclose(doc["eta"], ref.eta, rtol=1e-12, atol=0)


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"dist": "lorentz", "sigma": 0.4}))
    code, out, err = _run(capsys, "selfconsistent", "--config", str(cfg), "--sigma", "0.2", "--format", "json",
                          "--print-config")
    assert code == 0
    assert json.loads(out)["r"] == pytest.approx(0.8, abs=1e-6)
    printed = json.loads(err)
    assert printed["sigma"] == 0.2 and printed["dist"] == "lorentz" and "tmax" in printed


def test_exit_codes(tmp_path, capsys):
    assert _run(capsys, "dynamics", "--network", "ws:k=3,p=0.5")[0] == 1
    assert _run(capsys, "selfconsistent", "--theta0", "0")[0] == 1
    assert _run(capsys, "dynamics", "--n", "20", "--sigma", "1e307", "--dt", "100", "--tmax", "200",
                "--stride", "1")[0] == 2
    bad = tmp_path / "bad.json"
    bad.write_text('{"nope": 1}')
    assert _run(capsys, "critical", "--config", str(bad))[0] == 1
    with pytest.raises(SystemExit) as ex:
        main(["dynamics", "--n", "abc"])
    assert ex.value.code == 1


def test_critical_command(capsys):
    code, out, _ = _run(capsys, "critical", "--dist", "uniform", "--format", "json")
    doc = json.loads(out)
    assert doc["sigma_c"] == pytest.approx(np.pi / (2 * np.sqrt(3)), abs=1e-5)
    assert doc["sigma_c_limit"] == pytest.approx(doc["sigma_c_closed_form"], rel=1e-9)


def test_free_decay_command(capsys):
    code, out, _ = _run(capsys, "free-decay", "--dist", "gaussian", "--sigma", "1", "--tmax", "2", "--points", "3",
                        "--format", "json")
    doc = json.loads(out)
    np.testing.assert_allclose(doc["eta"], np.exp(-np.array([0.0, 1.0, 2.0]) ** 2), rtol=1e-12)


def test_exact_command(tmp_path, capsys):
    out = tmp_path / "ex.csv"
    assert _run(capsys, "exact", "--n", "8", "--n-exc", "2", "--sigma", "0", "--tmax", "5", "--points", "6",
                "--out", str(out))[0] == 0
    _, cols, rows = read_csv(out)
    np.testing.assert_allclose([r[1] for r in rows], 1.0, atol=1e-10)
    assert _run(capsys, "exact", "--n", "20", "--full")[0] == 1


def test_sweep_command(tmp_path, capsys):
    out = tmp_path / "s.csv"
    svg = tmp_path / "s.svg"
    code, _, _ = _run(capsys, "sweep", "--kind", "eta-vs-sigma", "--engine", "selfconsistent", "--sigmas",
                      "0.2:1.0:0.2", "--out", str(out), "--svg", str(svg), "--jobs", "1")
    assert code == 0
    meta, cols, rows = read_csv(out)
    assert [r[cols.index("sigma")] for r in rows] == [0.2, 0.4, 0.6, 0.8, 1.0]
    assert meta["provenance"]["seeds"] == [0]
    assert svg.exists()


def test_phase_map_svg(tmp_path, capsys):
    svg = tmp_path / "pm.svg"
    assert _run(capsys, "sweep", "--kind", "phase-map", "--sigmas", "0.2,0.6,1.0", "--theta0s", "0.5,1.5",
                "--svg", str(svg), "--format", "json", "--jobs", "1")[0] == 0
    assert "<svg" in svg.read_text()


def test_empty_plot_warns(tmp_path):
    from supercoherence.plotting import line_plot

    with pytest.warns(RuntimeWarning):
        assert line_plot(tmp_path / "e.svg", [], [], "x", "y") is False
    assert not (tmp_path / "e.svg").exists()


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "supercoherence.cli", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and "supercoherence" in proc.stdout
