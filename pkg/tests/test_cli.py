import json

import numpy as np
import pytest

from mhfem.cli import main
from mhfem.harness.export import read_csv, read_vtk

SMALL_RECT = """[scenario]
preset = test1
[mesh]
n_inner_side = 6
n_outer_side = 5
grading = 1.3
[stepper]
max_steps = {steps}
tau = {tau}
[output]
dir = {out}
snapshot_every = {snap}
"""


def write_ini(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


@pytest.fixture(autouse=True)
def out_root(tmp_path, monkeypatch):
    monkeypatch.setenv("MHFEM_OUTPUT_ROOT", str(tmp_path))


def test_one_step_run(tmp_path, capsys):
    ini = write_ini(tmp_path, "r.ini", SMALL_RECT.format(steps=1, tau=0.1, out="run", snap=1))
    assert main(["run", str(ini)]) == 0
    out = tmp_path / "run"
    assert len(list((out / "snapshots").glob("*.vtk"))) == 1
    assert (out / "config.resolved.ini").exists()
    rep = json.loads((out / "report.json").read_text())
    assert rep["status"] == "NOT_CONVERGED" and rep["steps"] == 1
    assert rep["max_constraint_residual"] <= 1e-10
    head, rows = read_csv(out / "metrics.csv")
    assert head[0] == "step" and len(rows) == 1
    assert "NOT_CONVERGED after 1 steps" in capsys.readouterr().out


def test_export_roundtrip(tmp_path):
    ini = write_ini(tmp_path, "r.ini", SMALL_RECT.format(steps=3, tau=0.1, out="run", snap=0))
    assert main(["run", str(ini)]) == 0
    state = tmp_path / "run" / "final_state.npz"
    assert main(["export", str(state), "-o", str(tmp_path / "e.vtk")]) == 0
    a = read_vtk(tmp_path / "e.vtk")
    b = read_vtk(tmp_path / "run" / "final_state.vtk")
    assert np.array_equal(a["point_data"]["density"], b["point_data"]["density"])
    assert main(["export", str(state), "--format", "csv"]) == 0
    head, rows = read_csv(state.with_suffix(".csv"))
    assert head == ["x", "y", "subdomain", "density"] and len(rows) == len(a["points"])
    assert main(["export", str(tmp_path / "none.npz")]) == 2


def test_missing_robin_exit_code(tmp_path, capsys):
    ini = write_ini(tmp_path, "s.ini", "[scenario]\nkind = strip_validation\n"
                    "[mesh]\nkind = strip\n[model]\nd0 = 1.0\n")
    assert main(["validate", str(ini)]) == 2
    assert "robin_b" in capsys.readouterr().err


def test_numerical_failure_exit_code(tmp_path, capsys):
    text = SMALL_RECT.format(steps=200, tau=10.0, out="div", snap=0)
    text += "[initial]\nkind = constant\nvalue = 10.0\n[model]\nr = 1.0\na = 1.0\nc = (0.0, 0.0)\n"
    ini = write_ini(tmp_path, "d.ini", text)
    with np.errstate(over="ignore", invalid="ignore"):
        assert main(["run", str(ini)]) == 3
    assert "numerical failure" in capsys.readouterr().err


@pytest.mark.invariant
def test_mesh_bytes_deterministic(tmp_path):
    texts = []
    for d in ("m1", "m2"):
        ini = write_ini(tmp_path, f"{d}.ini", SMALL_RECT.format(steps=1, tau=0.1, out=d, snap=0))
        assert main(["mesh", str(ini)]) == 0
        texts.append((tmp_path / d / "mesh.txt").read_bytes())
    assert texts[0] == texts[1]
    q = json.loads((tmp_path / "m1" / "quality.json").read_text())
    assert q["sigma2"] > 0 and q["n_triangles"] > 0


def test_manufactured_converge(tmp_path, capsys):
    tables = []
    for d in ("c1", "c2"):
        ini = write_ini(tmp_path, f"{d}.ini", "[scenario]\npreset = manufactured\n"
                        f"[study]\nlevels = (5, 9, 17)\n[output]\ndir = {d}\n")
        assert main(["converge", str(ini)]) == 0
        tables.append((tmp_path / d / "table.txt").read_bytes())
    assert tables[0] == tables[1]
    rep = json.loads((tmp_path / "c1" / "report.json").read_text())
    assert len(rep["l2_error"]) == 3
    assert rep["l2_error"][0] > rep["l2_error"][1] > rep["l2_error"][2]
    assert "L2 error" in capsys.readouterr().out


def test_manufactured_run(tmp_path):
    ini = write_ini(tmp_path, "m.ini", "[scenario]\npreset = manufactured\n"
                    "[study]\nlevels = (6,)\n[output]\ndir = mr\n")
    assert main(["run", str(ini)]) == 0
    rep = json.loads((tmp_path / "mr" / "report.json").read_text())
    assert rep["status"] == "CONVERGED" and rep["steps"] == 1


def test_validate_requires_strip(tmp_path, capsys):
    assert main(["validate", "--preset", "test1"]) == 2
