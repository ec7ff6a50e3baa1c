import json

import pytest

from riesz_balayage.cli import EXIT_CONFIG, EXIT_OK, EXIT_SOLVER, EXIT_VERIFY, main

SPHERE = {"kernel": {"alpha": 2, "dim": 3}, "geometry": {"shape": "sphere", "center": [0, 0, 0], "radius": 1},
          "resolution": 60, "source": {"charges": [{"location": [0, 0, 2]}]}}


def write(tmp_path, raw, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(raw))
    return str(p)


@pytest.mark.parametrize("command,files", [
    ("discretize", {"panels.csv", "result.json"}),
    ("sweep", {"measure.csv", "result.json"}),
    ("equilibrium", {"measure.csv", "result.json"}),
    ("gauss", {"measure.csv", "result.json"}),
])
def test_basic_commands(tmp_path, command, files):
    out = tmp_path / "out"
    assert main([command, "--config", write(tmp_path, SPHERE), "--out", str(out), "--quiet"]) == EXIT_OK
    assert {p.name for p in out.iterdir()} == files
    doc = json.loads((out / "result.json").read_text())
    assert doc["command"] == command and doc["failed_checks"] == []
    assert len(doc["config_hash"]) == 16


def test_sweep_result_values(tmp_path):
    out = tmp_path / "o"
    main(["sweep", "--config", write(tmp_path, SPHERE), "--out", str(out), "--quiet"])
    res = json.loads((out / "result.json").read_text())["result"]
    assert res["swept_mass"] == pytest.approx(0.5, rel=5e-2)


def test_invalid_config_exit_and_error_file(tmp_path, capsys):
    raw = {**SPHERE, "kernel": {"alpha": 5, "dim": 3}}
    out = tmp_path / "o"
    assert main(["sweep", "--config", write(tmp_path, raw), "--out", str(out)]) == EXIT_CONFIG
    doc = json.loads((out / "error.json").read_text())
    assert doc["violations"][0]["field"] == "kernel.alpha"
    assert "invalid config" in capsys.readouterr().err


def test_malformed_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    assert main(["sweep", "--config", str(p), "--out", str(tmp_path / "o")]) == EXIT_CONFIG


def test_charge_on_node_is_a_config_error(tmp_path):
    raw = {**SPHERE, "geometry": {"shape": "segment", "a": [0, 0], "b": [1, 0]}, "kernel": {"alpha": 1.5, "dim": 2},
           "resolution": 2, "source": {"charges": [{"location": [0.25, 0]}]}}
    out = tmp_path / "o"
    assert main(["sweep", "--config", write(tmp_path, raw), "--out", str(out)]) == EXIT_CONFIG
    assert "continuity hypothesis" in (out / "error.json").read_text()


def test_solver_failure_exit(tmp_path):
    raw = {**SPHERE, "geometry": {"shape": "ball", "center": [0, 0, 0], "radius": 1}, "resolution": 3,
           "options": {"max_iter": 1}}
    assert main(["sweep", "--config", write(tmp_path, raw), "--out", str(tmp_path / "o")]) == EXIT_SOLVER


def test_verification_failure_exit(tmp_path):
    # 20 panels cannot match the source potential to 1% at the nodes
    raw = {**SPHERE, "resolution": 20}
    out = tmp_path / "o"
    assert main(["verify", "--config", write(tmp_path, raw), "--out", str(out), "--quiet"]) == EXIT_VERIFY
    doc = json.loads((out / "result.json").read_text())
    assert any("potential_match" in f for f in doc["failed_checks"])


def test_seed_and_tol_overrides_recorded(tmp_path):
    out = tmp_path / "o"
    main(["sweep", "--config", write(tmp_path, SPHERE), "--out", str(out), "--seed", "11", "--tol", "1e-9", "--quiet"])
    doc = json.loads((out / "result.json").read_text())
    assert doc["rng_seed"] == 11 and doc["tol"] == 1e-9


def test_converge_up_scenario(tmp_path):
    out = tmp_path / "o"
    assert main(["converge-up", "--config", "segment_exhaustion", "--out", str(out), "--quiet"]) == EXIT_OK
    names = {p.name for p in out.iterdir()}
    assert {"stages.csv", "gauss_stages.csv", "measure.csv", "result.json"} <= names


def test_converge_down(tmp_path):
    # segments [0, 1 + 2^-j] shrinking towards [0, 1]
    subsets = [{"shape": "ball", "center": [0, 0], "radius": r + 1e-4} for r in (2.0, 1.5, 1.25, 1.125)]
    raw = {"kernel": {"alpha": 1.5, "dim": 2}, "geometry": {"shape": "segment", "a": [0, 0], "b": [2, 0]},
           "resolution": 64, "source": {"charges": [{"location": [0.5, 0.5]}]}, "options": {"subsets": subsets}}
    out = tmp_path / "o"
    assert main(["converge-down", "--config", write(tmp_path, raw), "--out", str(out), "--quiet"]) == EXIT_OK
    assert (out / "stages.csv").read_text().count("\n") == 5


def test_runs_are_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    cfg = write(tmp_path, {**SPHERE, "resolution": 200})
    for d in (a, b):
        assert main(["verify", "--config", cfg, "--out", str(d), "--quiet"]) == EXIT_OK
    for p in sorted(a.iterdir()):
        assert p.read_bytes() == (b / p.name).read_bytes(), p.name
