import json
import subprocess
import sys

import pytest

from spindle.cli import run


def read(path):
    return path.read_text(encoding="utf-8")


def test_simulate_smoke(tmp_path):
    out = tmp_path / "runs" / "a"
    code = run(["simulate", "--model", "circle", "--rho", "1", "--r", "2", "--n", "1024,4096",
                "--reps", "100", "--seed", "7", "--out", str(out)])
    assert code == 0
    assert read(out / "records.csv").startswith("n,rep,f0,hull_area,missed_area\n")
    assert len(read(out / "records.csv").splitlines()) == 201
    assert read(out / "moments.csv").startswith("n,M,mean_f0,")
    manifest = json.loads(read(out / "manifest.json"))
    assert manifest["subcommand"] == "simulate"
    assert manifest["config"]["seed"] == 7
    assert manifest["config"]["model"] == {"kind": "circle", "rho": 1.0}


def test_manifest_replay_is_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(["simulate", "--model", "ellipse", "--a", "1", "--b", "0.8", "--r", "2",
                "--n", "64,128", "--reps", "5", "--seed", "3", "--out", str(a)]) == 0
    assert run(["simulate", "--config", str(a / "manifest.json"), "--out", str(b),
                "--workers", "2"]) == 0
    for name in ("records.csv", "moments.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_flags_override_config(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"model": {"kind": "circle", "rho": 1.0}, "r": 2.0, "n": [32],
                               "reps": 3, "seed": 1}))
    out = tmp_path / "o"
    assert run(["simulate", "--config", str(cfg), "--seed", "5", "--out", str(out)]) == 0
    assert json.loads(read(out / "manifest.json"))["config"]["seed"] == 5


def test_constants_smoke(tmp_path, capsys):
    assert run(["constants", "--model", "ellipse", "--a", "1", "--b", "0.8", "--r", "2",
                "--out", str(tmp_path)]) == 0
    data = json.loads(capsys.readouterr().out)
    assert set(data) == {"c1", "vertex_coeff", "area_coeff", "gamma_5_3"}
    assert data["area_coeff"] / data["vertex_coeff"] == pytest.approx(0.8 * 3.141592653589793)


def test_radius_below_r_m_exits_2(tmp_path, capsys):
    code = run(["simulate", "--model", "circle", "--rho", "1", "--r", "0.5", "--n", "100",
                "--out", str(tmp_path)])
    assert code == 2
    assert "r_M" in capsys.readouterr().err


def test_unknown_flag_exits_2(tmp_path):
    assert run(["simulate", "--bogus", "1", "--out", str(tmp_path)]) == 2


def test_unknown_config_key_exits_2(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"r": 2.0, "n": [32], "colour": "red"}))
    assert run(["simulate", "--config", str(cfg), "--out", str(tmp_path)]) == 2


def test_missing_required_exits_2(tmp_path):
    assert run(["simulate", "--model", "circle", "--out", str(tmp_path)]) == 2


def test_hull_roundtrip(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(["hull", "--model", "circle", "--r", "2", "--n", "300", "--seed", "4", "--out", str(a)]) == 0
    summary = json.loads(read(a / "summary.json"))
    assert set(summary) == {"f0", "hull_area", "missed_area", "edge_count"}
    assert run(["hull", "--input", str(a / "vertices.csv"), "--r", "2", "--out", str(b)]) == 0
    again = json.loads(read(b / "summary.json"))
    assert again["f0"] == summary["f0"]
    assert again["hull_area"] == pytest.approx(summary["hull_area"], rel=1e-12)


def test_hull_runtime_failure_exits_1(tmp_path):
    pts = tmp_path / "pts.csv"
    pts.write_text("x,y\n0,0\n1,0\n0,1\n")
    assert run(["hull", "--input", str(pts), "--r", "0.1", "--out", str(tmp_path / "o")]) == 1


def test_cap_and_lemma1(tmp_path):
    assert run(["cap", "--model", "ellipse", "--a", "1", "--b", "0.8", "--r", "2",
                "--theta", "0,1", "--t-grid", "0.01,0.001", "--out", str(tmp_path)]) == 0
    lines = read(tmp_path / "caps.csv").splitlines()
    assert lines[0] == "theta,t,area,arc_length" and len(lines) == 5
    assert run(["lemma1", "--model", "ellipse", "--a", "0.9", "--b", "0.7", "--t-grid", "0.02,0.01",
                "--samples", "2000", "--out", str(tmp_path)]) == 0
    lines = read(tmp_path / "lemma1.csv").splitlines()
    assert lines[0] == "t,var_ahat,se" and len(lines) == 3


def test_cap_height_out_of_range_exits_2(tmp_path):
    assert run(["cap", "--model", "circle", "--r", "2", "--t-grid", "5", "--out", str(tmp_path)]) == 2


def test_fit(tmp_path, capsys):
    sim = tmp_path / "sim"
    assert run(["simulate", "--model", "circle", "--r", "2", "--n", "64,128,256", "--reps", "20",
                "--out", str(sim)]) == 0
    capsys.readouterr()
    assert run(["fit", "--input", str(sim / "moments.csv"), "--column", "mean_f0",
                "--out", str(tmp_path / "fit")]) == 0
    fit = json.loads(capsys.readouterr().out)
    assert set(fit) == {"slope", "intercept", "slope_stderr", "points_used"}
    assert 0.1 < fit["slope"] < 0.6
    assert run(["fit", "--input", str(sim / "moments.csv"), "--column", "nope",
                "--out", str(tmp_path / "fit")]) == 2


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "spindle", "constants", "--model", "circle",
                           "--rho", "1", "--r", "0.5", "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 2
    assert "r_M" in proc.stderr
