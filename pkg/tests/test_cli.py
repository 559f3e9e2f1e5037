import csv
import json
import subprocess
import sys

import pytest

from nodallab.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_exponents_text(capsys):
    code, out, _ = run(capsys, "exponents", "2")
    assert code == 0
    assert "growth_volume" in out and "1/4" in out and "1/8" in out


def test_exponents_all_json(capsys):
    code, out, _ = run(capsys, "exponents", "--format", "json", "--strict")
    assert code == 0
    tables = json.loads(out)["tables"]
    assert [t["n"] for t in tables] == ["2", "3", "4", "5", "6"]
    assert all(v for t in tables for k, v in t.items() if k.startswith("chain_"))


def test_input_errors_exit_one(capsys):
    assert run(capsys, "exponents", "0")[0] == 1
    assert run(capsys, "field", "--kind", "box", "--k", "1", "1", "--phase", "cos")[0] == 1
    assert run(capsys, "field", "--lam", "3")[0] == 1
    assert run(capsys, "bogus")[0] == 1
    assert run(capsys, "sweep", "/nonexistent/config.json")[0] == 1


def test_modes_csv(capsys, tmp_path):
    out_file = tmp_path / "modes.csv"
    code, _, _ = run(capsys, "modes", "--lambda-max", "5", "--format", "csv", "--out", str(out_file))
    assert code == 0
    rows = list(csv.DictReader(out_file.open()))
    assert [(float(r["lambda"]), int(r["multiplicity"])) for r in rows] == [
        (0, 1), (1, 4), (2, 4), (4, 4), (5, 8)]


def test_field_and_nodal(capsys, tmp_path):
    code, out, _ = run(capsys, "field", "--k", "1", "0", "--phase", "sin", "--resolution", "16")
    assert code == 0 and json.loads(out)["resolution"] == 16
    code, out, _ = run(capsys, "field", "--k", "1", "0", "--phase", "sin", "--resolution", "8",
                       "--format", "csv")
    assert code == 0 and len(out.strip().splitlines()) == 65
    mesh = tmp_path / "mesh.csv"
    code, out, _ = run(capsys, "nodal", "--k", "1", "0", "--phase", "sin", "--resolution", "128",
                       "--format", "csv", "--out", str(mesh))
    assert code == 0
    assert json.loads(out)["total_measure"] == pytest.approx(4 * 3.141592653589793, rel=0.01)
    assert mesh.exists()


def test_mode_json_input(capsys, tmp_path):
    from nodallab.geometry import make_domain
    from nodallab.modes import make_random_wave
    path = tmp_path / "mode.json"
    path.write_text(make_random_wave(make_domain("torus", 2), 25, 4).to_json())
    code, out, _ = run(capsys, "growth", "--mode-json", str(path))
    assert code == 0
    payload = json.loads(out)
    assert payload["ball_count"] > 0 and payload["max_beta"] >= 0


def test_dong_strict(capsys):
    code, out, _ = run(capsys, "dong", "--k", "3", "0", "--phase", "sin", "--strict")
    assert code == 0 and json.loads(out)["rel_err"] < 0.01
    code, _, err = run(capsys, "dong", "--k", "3", "0", "--phase", "sin", "--resolution", "24",
                       "--strict", "--tol", "1e-6")
    assert code == 2 and "check failed" in err


def test_norms(capsys):
    code, out, _ = run(capsys, "norms", "--k", "1", "0", "--phase", "sin", "--p", "1", "2", "6")
    assert code == 0
    payload = json.loads(out)
    assert payload["sogge_ratio"]["6.0"] == pytest.approx(0.342, abs=1e-3)
    assert payload["holder"]["6.0"]["pass"]


def test_harmonic(capsys):
    code, out, _ = run(capsys, "harmonic", "--terms", "0:1:0", "1:1:0", "--strict")
    assert code == 0
    payload = json.loads(out)
    assert payload["mean_value"]["pass"] and payload["mean_value"]["sup"] == pytest.approx(2.0)
    code, out, _ = run(capsys, "harmonic", "--seed", "3", "--k-max", "4")
    assert code == 0 and json.loads(out)["u0"] == 1.0


def test_sweep_and_fit(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"domain": {"kind": "torus", "n": 2}, "lambda_list": [25, 50, 65],
                               "seeds": [1], "output_dir": str(tmp_path / "out")}))
    code, out, _ = run(capsys, "sweep", str(cfg), "--format", "all")
    assert code == 0
    files = json.loads(out)["files"]
    assert sorted(p.rsplit(".", 1)[1] for p in files) == ["csv", "dat", "json"]
    code, out, _ = run(capsys, "fit", str(tmp_path / "out" / "sweep.csv"), "--quantity", "nodal_measure")
    assert code == 0
    assert json.loads(out)["slope"] == pytest.approx(0.5, abs=0.05)


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "nodallab", "exponents", "3"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and "-1/6" in proc.stdout
