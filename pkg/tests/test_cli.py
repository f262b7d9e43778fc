import json
import math

import pytest

from hypsmear.bounds import gap_bound, tube_factor, vl_estimate
from hypsmear.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_vn_json(capsys):
    code, out, _ = run(capsys, "vn", "--dim", "2")
    assert code == 0
    doc = json.loads(out)
    assert doc["n"] == 2
    assert doc["v_n"] == pytest.approx(math.pi, abs=1e-11)
    assert "3.14159265359" in out  # 12 significant digits


def test_vn_rejects_dim_1(capsys):
    code, _, err = run(capsys, "vn", "--dim", "1")
    assert code == 1
    assert "error" in err


def test_unknown_command_is_usage_error(capsys):
    assert run(capsys, "frobnicate")[0] == 2
    assert run(capsys, "vn")[0] == 2  # missing required --dim


def test_tube_matches_library(capsys):
    code, out, _ = run(capsys, "tube", "--dim", "3", "--t", "1.25")
    assert code == 0
    doc = json.loads(out)
    assert doc["tube_factor"] == pytest.approx(tube_factor(3, 1.25), rel=1e-11)


def test_regvol_quadrature(capsys):
    code, out, _ = run(capsys, "regvol", "--dim", "2", "--edge", "2.0", "--tol", "1e-9")
    assert code == 0
    doc = json.loads(out)
    assert doc["volume"] == pytest.approx(1.1616934409423951, abs=1e-7)
    assert doc["converged"] is True


def test_vl_fields_and_determinism(capsys):
    args = ("vl", "--dim", "2", "--edge", "4.0", "--restarts", "2", "--seed", "7")
    code, out1, _ = run(capsys, *args)
    assert code == 0
    doc = json.loads(out1)
    assert doc["n"] == 2 and doc["L"] == 4.0 and doc["restarts"] == 2
    assert len(doc["best_perturbation"]) == 3
    _, out2, _ = run(capsys, *args)
    assert out1 == out2


def test_bound_reproduces_algebra(capsys):
    code, out, _ = run(
        capsys, "bound", "--dim", "2", "--edge", "4.0", "--r", "0.05", "--restarts", "2"
    )
    assert code == 0
    doc = json.loads(out)
    manual = doc["vl"] * (1.0 - 0.05 * tube_factor(2, 7.0)) / (1.0 + 0.05 * tube_factor(2, 4.0))
    assert doc["bound"] == pytest.approx(manual, rel=1e-9)


def test_curve_vl_vs_L_csv(capsys):
    code, out, _ = run(
        capsys,
        "curve", "--kind", "vl_vs_L", "--grid", "4:6:2", "--restarts", "2", "--format", "csv",
    )
    assert code == 0
    lines = out.strip().split("\n")
    comments = [l for l in lines if l.startswith("#")]
    assert any("seed=" in c for c in comments)
    data = [l for l in lines if not l.startswith("#")]
    assert data[0].split(",")[0] == "L"
    assert len(data) == 3  # header plus the two grid rows
    first = data[1].split(",")
    assert float(first[0]) == 4.0
    assert float(first[1]) == pytest.approx(vl_estimate(2, 4.0, restarts=2).value, abs=1e-9)


def test_curve_bound_vs_r_includes_vl_row(capsys):
    code, out, _ = run(
        capsys,
        "curve", "--kind", "bound_vs_r", "--grid", "0:0.1:0.1",
        "--edge-grid", "4:4:1", "--restarts", "2", "--format", "csv",
    )
    assert code == 0
    rows = [l.split(",") for l in out.strip().split("\n") if not l.startswith("#")]
    header, first = rows[0], rows[1]
    assert header == ["r", "L_best", "bound"]
    v = vl_estimate(2, 4.0, restarts=2).value
    assert float(first[0]) == 0.0
    # at r = 0 the bound degenerates to the plain infimum estimate
    assert float(first[2]) == pytest.approx(v, abs=1e-9)


def test_curve_empty_grid_is_usage_error(capsys):
    code, _, err = run(capsys, "curve", "--kind", "vl_vs_L", "--grid", "6:4:2")
    assert code == 2
    assert "usage error" in err


def test_curve_glue_requires_volumes(capsys):
    code, _, _ = run(capsys, "curve", "--kind", "glue_sequence", "--grid", "1:3:1")
    assert code == 2


def test_glue_halving_ratios(capsys):
    code, out, _ = run(capsys, "glue", "--volm", "10", "--volb", "2", "--imax", "3")
    assert code == 0
    doc = json.loads(out)
    assert doc["columns"] == ["i", "r", "bound"]
    rows = doc["rows"]
    assert [row[0] for row in rows] == [1, 2, 3]
    assert rows[0][1] == pytest.approx(0.2, rel=1e-15)
    assert rows[2][1] == pytest.approx(0.2 / 3.0, rel=1e-15)
    bounds = [row[2] for row in rows]
    assert bounds == sorted(bounds)


def test_smear_run_summary_and_csv(capsys, tmp_path):
    csv_path = tmp_path / "cells.csv"
    code, out, _ = run(
        capsys,
        "smear", "run", "--model", "holed_torus", "--edge", "4.0",
        "--samples", "4000", "--csv", str(csv_path),
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["model"] == "holed_torus"
    assert doc["samples"] == 4000 and doc["seed"] == 1789
    assert doc["checks"]["sandwich"] is True
    assert doc["checks"]["residuals"] is True
    assert doc["checks"]["ratio"] is True
    rows = [l for l in csv_path.read_text().split("\n") if l and not l.startswith("#")]
    assert len(rows) - 1 == doc["entry_count"]  # header row
    assert rows[0].startswith("k0,")


def test_smear_run_rejects_unknown_model(capsys):
    code, _, err = run(
        capsys, "smear", "run", "--model", "nope", "--edge", "4.0", "--samples", "100"
    )
    assert code == 1
    assert "error" in err


def test_smear_check_zero_violations(capsys):
    code, out, _ = run(
        capsys,
        "smear", "check", "--model", "holed_torus", "--edge", "4.0", "--samples", "4000",
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["violations"] == 0


def test_out_files_byte_identical(capsys, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        code, _, _ = run(
            capsys,
            "smear", "run", "--model", "holed_torus", "--edge", "4.0",
            "--samples", "3000", "--out", str(path),
        )
        assert code == 0
    assert a.read_bytes() == b.read_bytes()
