import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from wsurf.cli import build_parser, main

CW = '{"kind": "conformal_willmore"}'


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_classify(capsys):
    code, out, _ = run(capsys, "classify", "--functional", CW)
    assert code == 0 and json.loads(out)["class"] == "invariant"


def test_functional_from_file(capsys, tmp_path):
    f = tmp_path / "f.json"
    f.write_text('{"kind": "p_willmore", "p": 3}')
    code, out, _ = run(capsys, "classify", "--functional", str(f))
    assert json.loads(out)["class"] == "shrinking"


def test_help_and_unknown_flags(capsys):
    assert main(["--help"]) == 0
    capsys.readouterr()
    for sub in build_parser()._subparsers._group_actions[0].choices:
        assert main([sub, "--help"]) == 0
        assert main([sub, "--no-such-flag"]) == 1
    assert main(["axisym", "shoot", "--help"]) == 0
    assert main(["axisym", "integrate", "--bogus"]) == 1
    capsys.readouterr()


def test_validation_error_json(capsys):
    code, out, err = run(capsys, "--json-errors", "classify", "--functional", '{"kind": "p_willmore", "p": 1}')
    assert code == 1
    obj = json.loads(out)
    assert obj["error"] == "InvalidParams" and obj["exit_code"] == 1
    assert "p_willmore" in err
    code, out, _ = run(capsys, "classify", "--functional", "{not json")
    assert code == 1 and out == ""


def test_numerical_error_exit_code(capsys):
    code, out, _ = run(capsys, "--json-errors", "axisym", "integrate", "--controller", "rk45", "--u0", "-3", "--H0", "-5", "--t-end", "5")
    assert code == 2 and json.loads(out)["error"] == "StepFloor"


def test_flux_scaling_flat_disk(capsys):
    code, out, _ = run(capsys, "flux", "--kind", "scaling", "--functional", CW, "--surface", '{"name": "disk"}')
    rep = json.loads(out)
    assert code == 0 and rep["interior"] == 0.0 and rep["boundary"] == 0.0
    code, _, _ = run(capsys, "flux", "--kind", "translation", "--functional", CW, "--surface", '{"name": "disk"}')
    assert code == 1


def test_axisym_integrate_csv(capsys, tmp_path):
    path = tmp_path / "c.csv"
    code, out, _ = run(capsys, "axisym", "integrate", "--csv", str(path))
    assert code == 0 and json.loads(out)["reason"] == "reached_end"
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    t = np.array([float(r["t"]) for r in rows])
    f = np.array([float(r["f"]) for r in rows])
    assert np.max(np.abs(f - np.cosh(t))) <= 1e-8


def test_axisym_checks(capsys):
    _, out, _ = run(capsys, "axisym", "check-consth", "--T", "0.5", "--c", "0")
    rep = json.loads(out)
    assert abs(rep["residual"]) < 1e-12 and rep["shape"] == "catenoid"
    _, out, _ = run(capsys, "axisym", "check-c4", "--T", "0.5")
    assert json.loads(out)["second"] == pytest.approx(2 * np.cosh(0.5), rel=1e-9)


def test_shoot_threads_independent(capsys, monkeypatch):
    argv = ["axisym", "shoot", "--grid", "3,3", "--n-t", "5", "--T-window", "0.8,0.8"]
    _, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, "--threads", "2", *argv)
    monkeypatch.setenv("WSURF_THREADS", "3")
    _, c, _ = run(capsys, *argv)
    assert a == b == c
    assert any(abs(r["H0"]) < 1e-8 for r in json.loads(a)["roots"])
    assert main(["--threads", "0", *argv]) == 1
    capsys.readouterr()


def test_el_residual_and_stress(capsys, tmp_path):
    path = tmp_path / "w.csv"
    code, out, _ = run(capsys, "el-residual", "--functional", CW, "--surface", '{"name": "catenoid_band"}', "--order", "8", "--csv", str(path))
    assert code == 0 and json.loads(out)["sup"] < 1e-10
    assert path.read_text().splitlines()[0].endswith(",W")
    code, out, _ = run(capsys, "stress-check", "--functional", CW, "--surface", '{"name": "torus_band"}', "--grid", "3")
    rep = json.loads(out)
    assert code == 0 and rep["residual"][1] < 1e-6


def test_bc(capsys):
    _, out, _ = run(capsys, "bc", "--functional", CW, "--surface", '{"name": "sphere_cap"}')
    assert json.loads(out)["sup"]["umbilic"] < 1e-12
    assert main(["bc", "--set", "free", "--functional", CW, "--surface", '{"name": "sphere_cap"}']) == 1
    capsys.readouterr()


def test_variation_check(capsys):
    for which in ("dg", "dmu", "dH", "dK", "dlap"):
        _, out, _ = run(capsys, "variation-check", "--which", which, "--surface", '{"name": "torus_band"}')
        assert json.loads(out)[which]["rel_error"] < 1e-4
    _, out, _ = run(capsys, "variation-check", "--which", "curve", "--field", "constant", "--surface", '{"name": "sphere_cap", "theta": [0, 1.5707963267948966]}')
    assert json.loads(out)["rel_error"] < 1e-4
    helf = '{"kind": "helfrich", "k_c": 1, "k_bar": 1, "c0": 0.5}'
    _, out, _ = run(capsys, "variation-check", "--which", "firstvar", "--field", "bump", "--functional", helf, "--surface", '{"name": "torus_band"}', "--order", "16")
    assert json.loads(out)["rel_error"] < 1e-4


def test_flow_outputs_and_determinism(capsys, tmp_path):
    mesh = tmp_path / "in.off"
    from wsurf.flow import bump_disk
    from wsurf.mesh import load_mesh, save_mesh

    save_mesh(bump_disk(10, 0.1), mesh)
    outs = []
    for k in range(2):
        trace, final, rep = tmp_path / f"t{k}.csv", tmp_path / f"f{k}.off", tmp_path / f"r{k}.json"
        code, _, _ = run(
            capsys, "flow", "--functional", '{"kind": "p_willmore", "p": 3}', "--mesh", str(mesh),
            "--config", '{"scheme": "semi_implicit", "max_steps": 5}', "--trace-csv", str(trace),
            "--final-mesh", str(final), "--out", str(rep),
        )
        assert code == 0
        outs.append((trace.read_bytes(), final.read_bytes(), rep.read_bytes()))
    assert outs[0] == outs[1]
    assert json.loads(outs[0][2])["monotone"] is True
    assert load_mesh(tmp_path / "f0.off").n_vertices == load_mesh(mesh).n_vertices
    assert main(["flow", "--functional", CW]) == 1
    capsys.readouterr()


def test_console_script():
    out = subprocess.run([sys.executable, "-m", "wsurf.cli", "classify", "--functional", '{"kind": "area"}'], capture_output=True, text=True)
    assert out.returncode == 0 and json.loads(out.stdout)["class"] == "expanding"
    out = subprocess.run([sys.executable, "-m", "wsurf.cli", "frobnicate"], capture_output=True, text=True)
    assert out.returncode == 1
