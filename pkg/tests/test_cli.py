import json
import math
import os
from pathlib import Path

import pytest

from gentaylor import problem
from gentaylor.cli import main, parse_grid

ROOT = Path(__file__).resolve().parents[1]
PROBLEMS = ROOT / "problems"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    lines = text.strip().split("\n")
    return lines[0].split(","), [[float(v) for v in line.split(",")] for line in lines[1:]]


def test_grid_syntax():
    assert list(parse_grid("0:1:3")) == [0.0, 0.5, 1.0]
    assert list(parse_grid("pi/2")) == [math.pi / 2]


def test_kernel_harmonic_file(capsys):
    code, out, _ = run(capsys, "kernel", "--problem", str(PROBLEMS / "harmonic.json"),
                       "--grid", "1:1:1", "--s-grid", "0:0:1")
    assert code == 0
    header, data = rows(out)
    assert header == ["x", "s", "K"]
    assert data[0][:2] == [1.0, 0.0]
    assert abs(data[0][2] - math.sin(1)) <= 1e-9


def test_kernel_diagonal_zero(capsys):
    code, out, _ = run(capsys, "kernel", "--name", "quartic", "--grid", "0:2:3")
    _, data = rows(out)
    assert all(k == 0.0 for x, s, k in data if x == s)


def test_kernel_quartic_half_period(capsys):
    code, out, _ = run(capsys, "kernel", "--problem", str(PROBLEMS / "quartic.json"),
                       "--grid", "pi", "--s-grid", "0")
    _, data = rows(out)
    assert abs(data[0][2]) <= 1e-8


def test_expand(capsys):
    code, out, _ = run(capsys, "expand", "--problem", str(PROBLEMS / "harmonic.json"), "--grid", "0:1:2")
    header, data = rows(out)
    assert header == ["x", "initial_part", "remainder", "total", "reference", "discrepancy"]
    assert data[0][2] == 0.0
    assert abs(data[1][3] - math.e) <= 1e-8 and data[1][5] <= 1e-8


def test_expand_solution_has_no_remainder(capsys, tmp_path):
    doc = dict(problem.EXAMPLE_DOCUMENTS["harmonic"], test_function="cos(x) + 2*sin(x)")
    f = tmp_path / "h.json"
    f.write_text(json.dumps(doc))
    code, out, _ = run(capsys, "expand", "--problem", str(f), "--grid=-2:3:6")
    _, data = rows(out)
    assert max(abs(r[2]) for r in data) <= 1e-9


def test_solve(capsys):
    code, out, _ = run(capsys, "solve", "--problem", str(PROBLEMS / "harmonic.json"), "--grid", "pi/2")
    header, data = rows(out)
    assert header == ["x", "Y"]
    assert abs(data[0][1] - 1.0) <= 1e-8


def test_fundamental(capsys):
    code, out, _ = run(capsys, "fundamental", "--name", "harmonic", "--grid", "0")
    assert out.strip().split("\n") == ["x,y1,y2", "0,1,0"]


def test_volterra_cosh(capsys):
    code, out, _ = run(capsys, "volterra", "--name", "cosh_ide", "--end", "1", "--steps", "200")
    header, data = rows(out)
    assert header == ["x", "y_volterra", "y_direct", "diff"]
    assert len(data) == 201
    assert max(r[3] for r in data) <= 1e-4


def test_out_file_written_atomically(capsys, tmp_path):
    target = tmp_path / "k.csv"
    code, out, _ = run(capsys, "kernel", "--name", "harmonic", "--grid", "0:1:3", "--out", str(target))
    assert code == 0 and out == ""
    assert target.read_text().startswith("x,s,K\n")
    assert os.listdir(tmp_path) == ["k.csv"]


def test_deterministic_output(capsys):
    _, a, _ = run(capsys, "expand", "--name", "quartic", "--grid=-1:1:3")
    _, b, _ = run(capsys, "expand", "--name", "quartic", "--grid=-1:1:3")
    assert a == b


def test_verify_name(capsys):
    code, out, _ = run(capsys, "verify", "harmonic")
    assert code == 0
    assert "FAIL" not in out and out.count("PASS") == 7


def test_verify_file(capsys):
    code, out, _ = run(capsys, "verify", str(PROBLEMS / "variable_coefficient.json"))
    assert code == 0


def test_malformed_file_exit_two_without_report(capsys, tmp_path):
    f = tmp_path / "bad.json"
    f.write_text('{\n  "order": 2,\n  "interval": [0, 1],\n  "coefficients": ["0", "1"],\n  "x0": "zero"\n}\n')
    code, out, err = run(capsys, "verify", str(f))
    assert code == 2
    assert out == ""
    assert "line 5" in err


def test_invalid_json_line(capsys, tmp_path):
    f = tmp_path / "bad.json"
    f.write_text('{\n  "order": 2,\n  "interval": [0, 1]\n  "x0": 0\n}\n')
    code, _, err = run(capsys, "kernel", "--problem", str(f), "--grid", "0")
    assert code == 2 and "line 4" in err


def test_bad_expression(capsys, tmp_path):
    doc = dict(problem.EXAMPLE_DOCUMENTS["harmonic"], forcing="log(x)")
    f = tmp_path / "bad.json"
    f.write_text(json.dumps(doc, indent=2))
    code, _, err = run(capsys, "solve", "--problem", str(f), "--grid", "1")
    assert code == 2 and "forcing" in err


@pytest.mark.parametrize("argv", [
    ["kernel", "--name", "harmonic", "--grid", "0:20:3"],
    ["kernel", "--name", "nope", "--grid", "0"],
    ["kernel", "--name", "harmonic", "--grid", "0:1"],
    ["kernel", "--name", "harmonic"],
    ["volterra", "--name", "harmonic"],
])
def test_input_errors(capsys, argv):
    assert run(capsys, *argv)[0] == 2


@pytest.mark.filterwarnings("ignore:overflow")
def test_numerical_failure(capsys, tmp_path):
    doc = dict(problem.EXAMPLE_DOCUMENTS["harmonic"], forcing="exp(1000*x)")
    f = tmp_path / "overflow.json"
    f.write_text(json.dumps(doc))
    code, out, err = run(capsys, "solve", "--problem", str(f), "--grid", "1")
    assert code == 3 and "numerical failure" in err


def test_examples_written_match_shipped(capsys, tmp_path):
    assert run(capsys, "examples", "--write", str(tmp_path))[0] == 0
    for name in problem.EXAMPLE_DOCUMENTS:
        assert (tmp_path / f"{name}.json").read_text() == (PROBLEMS / f"{name}.json").read_text()


def test_examples_listing(capsys):
    code, out, _ = run(capsys, "examples")
    assert code == 0 and "quartic" in out


def test_docs_schema_matches_package():
    shipped = json.loads((ROOT / "docs" / "problem.schema.json").read_text())
    assert shipped == problem.schema()
