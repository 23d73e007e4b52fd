from __future__ import annotations

import csv
import io
import math
import subprocess
import sys

import pytest

from holderkit.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def csv_rows(text):
    lines = text.splitlines()
    assert lines[0].startswith("# config: ")
    return list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))


def rows_by_quantity(text):
    return {r["quantity"]: r for r in csv_rows(text)}


@pytest.mark.parametrize(
    "argv, code, quantity, expected",
    [
        (["velocity", "--expr", "asin(1-x)", "--at", "0", "--beta", "0.5", "--dir", "fwd"], 0, "velocity_fwd", -math.sqrt(2)),
        (["velocity", "--expr", "x^3", "--at", "0", "--beta", "0.5", "--dir", "fwd"], 0, "velocity_fwd", 0.0),
        (["velocity", "--expr", "x^0.3", "--at", "0", "--beta", "0.5"], 2, "velocity_fwd", None),
        (["regularize", "--expr", "x + sqrt(x)", "--at", "0", "--beta", "0.5"], 0, "regularized_fwd", 1.0),
        (["exponent", "--expr", "abs(x)^0.3", "--at", "0", "--dir", "fwd"], 0, "alpha_fwd", 0.3),
        (["ito", "--f", "w^2/2", "--w", "sqrt(x)", "--at", "0", "--dir", "fwd"], 0, "ito_fwd", 0.5),
    ],
)
def test_examples(capsys, argv, code, quantity, expected):
    got, out, err = run(capsys, *argv, "--output", "csv")
    assert got == code
    row = rows_by_quantity(out)[quantity]
    if expected is None:
        assert row["status"] == "diverged"
        assert err
    else:
        assert float(row["value"]) == pytest.approx(expected, abs=0.02 if quantity == "alpha_fwd" else 1e-6)


def test_expand_arcsin(capsys):
    code, out, _ = run(capsys, "expand", "--expr", "asin(1-x)", "--at", "0", "--alpha", "0.5", "--n", "4", "--output", "csv")
    assert code == 0
    rows = csv_rows(out)
    assert list(rows[0]) == ["k", "exponent", "coefficient", "status"]
    expected = [-math.sqrt(2), -1 / (3 * 2**1.5), -3 / (5 * 2**4.5), -5 / (7 * 2**6.5), -35 / (9 * 2**10.5)]
    assert [float(r["coefficient"]) for r in rows] == pytest.approx(expected, abs=1e-9)
    assert [float(r["exponent"]) for r in rows] == [0.5, 1.5, 2.5, 3.5, 4.5]


def test_expand_compound_cos(capsys):
    code, out, _ = run(capsys, "expand", "--compound", "cos", "--alpha", "0.333333", "--n", "8", "--at", "0", "--output", "csv")
    assert code == 0
    coeffs = [float(r["coefficient"]) for r in csv_rows(out)]
    assert coeffs == pytest.approx([1, 0, -0.5, 0, 1 / 24, 0, -1 / 720, 0, 1 / 40320], abs=1e-15)


def test_expand_exact_power(capsys):
    code, out, _ = run(capsys, "expand", "--expr", "x^0.5", "--at", "0", "--alpha", "0.5", "--n", "2", "--output", "csv")
    assert code == 0
    assert [float(r["coefficient"]) for r in csv_rows(out)] == pytest.approx([1, 0, 0], abs=1e-12)


def test_expand_off_ladder_exits_2(capsys):
    code, out, err = run(capsys, "expand", "--expr", "x + sqrt(x)", "--alpha", "0.5", "--n", "2", "--output", "csv")
    assert code == 2
    assert csv_rows(out)[1]["status"] != "converged"


def test_errorcurve_arcsin(capsys):
    code, out, _ = run(capsys, "errorcurve", "--expr", "asin(1-x)", "--at", "0", "--alpha", "0.5", "--n", "4",
                       "--lo", "1e-4", "--hi", "0.5", "--points", "64", "--output", "csv")
    assert code == 0
    rows = csv_rows(out)
    assert len(rows) == 64 and list(rows[0]) == ["x", "abs_error"]
    errs = [float(r["abs_error"]) for r in rows]
    assert all(a < b for a, b in zip(errs, errs[1:]))


def test_errorcurve_exact_power(capsys):
    code, out, _ = run(capsys, "errorcurve", "--expr", "x^0.5 + 2*x^1.5", "--alpha", "0.5", "--n", "2",
                       "--lo", "1e-3", "--hi", "0.9", "--points", "16", "--output", "csv")
    assert code == 0
    assert max(float(r["abs_error"]) for r in csv_rows(out)) < 1e-12


def test_errorcurve_drops_points_outside_domain(capsys):
    code, out, err = run(capsys, "errorcurve", "--expr", "asin(1-x)", "--alpha", "0.5", "--n", "2",
                         "--lo", "0.5", "--hi", "4", "--points", "8", "--output", "csv")
    assert code == 0
    assert "dropped" in err
    assert 0 < len(csv_rows(out)) < 8


@pytest.mark.parametrize(
    "argv",
    [
        ["errorcurve", "--expr", "asin(1-x)", "--alpha", "0.5", "--points", "0"],
        ["errorcurve", "--expr", "asin(1-x)", "--alpha", "0.5", "--lo", "0.2", "--hi", "0.1"],
        ["velocity", "--expr", "asin(1-", "--beta", "0.5"],
        ["velocity", "--expr", "x", "--beta", "0.5", "--ratio", "2"],
        ["velocity", "--expr", "x", "--beta", "0.5", "--tol", "-1"],
        ["velocity", "--expr", "x", "--beta", "1.5"],
        ["velocity", "--beta", "0.5"],
        ["nosuchcommand"],
        ["expand", "--compound", "cosine", "--alpha", "0.5"],
        ["velocity", "--expr", "sqrt(x)", "--at", "0", "--beta", "0.5", "--dir", "bwd"],
    ],
)
def test_usage_parse_and_domain_errors_exit_1(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 1
    assert out == ""
    assert err


def test_dir_both_reports_agreement(capsys):
    code, out, _ = run(capsys, "velocity", "--expr", "abs(x)^0.5", "--beta", "0.5", "--dir", "both", "--output", "csv")
    assert code == 0
    rows = rows_by_quantity(out)
    assert float(rows["velocity_fwd"]["value"]) == pytest.approx(1.0)
    assert float(rows["velocity_bwd"]["value"]) == pytest.approx(-1.0)
    assert float(rows["agreement"]["value"]) == pytest.approx(2.0)


def test_header_echoes_flags(capsys):
    _, out, _ = run(capsys, "velocity", "--expr", "x", "--beta", "0.5", "--eps0", "0.25", "--steps", "12",
                    "--tol", "1e-9", "--output", "csv")
    header = out.splitlines()[0]
    for token in ("command=velocity", "expr=x", "eps0=0.25", "steps=12", "beta=0.5"):
        assert token in header
    assert "tol=1.0000000000000001e-09" in header


def test_floats_have_17_significant_digits(capsys):
    _, out, _ = run(capsys, "velocity", "--expr", "asin(1-x)", "--beta", "0.5", "--output", "csv")
    value = rows_by_quantity(out)["velocity_fwd"]["value"]
    assert float(value) == float(f"{float(value):.17g}")
    assert len(value.lstrip("-").replace(".", "").lstrip("0")) == 17


def test_env_tolerance(capsys, monkeypatch):
    monkeypatch.setenv("HOLDERKIT_TOL", "1e-4")
    _, out, _ = run(capsys, "velocity", "--expr", "x", "--beta", "0.5", "--output", "csv")
    assert "tol=0.0001" in out.splitlines()[0]
    monkeypatch.setenv("HOLDERKIT_TOL", "abc")
    assert run(capsys, "velocity", "--expr", "x", "--beta", "0.5")[0] == 1


def test_out_file(capsys, tmp_path):
    target = tmp_path / "curve.csv"
    code, out, _ = run(capsys, "errorcurve", "--expr", "asin(1-x)", "--alpha", "0.5", "--n", "3",
                       "--points", "8", "--output", "csv", "--out", str(target))
    assert code == 0 and out == ""
    assert len(csv_rows(target.read_text())) == 8


@pytest.mark.parametrize(
    "argv",
    [
        ["expand", "--expr", "asin(1-x)", "--alpha", "0.5", "--n", "4", "--output", "csv"],
        ["errorcurve", "--expr", "asin(1-x)", "--alpha", "0.5", "--n", "4", "--points", "32", "--output", "csv"],
        ["ito", "--f", "sin(w)", "--w", "sqrt(x)", "--at", "0.04", "--output", "csv"],
    ],
)
def test_csv_is_byte_identical_across_runs(capsys, argv):
    first = run(capsys, *argv)[1]
    second = run(capsys, *argv)[1]
    assert first == second and first


def test_table_output(capsys):
    code, out, _ = run(capsys, "regularize", "--expr", "asin(1-x)", "--beta", "0.5")
    assert code == 0
    assert out.splitlines()[0].split() == ["quantity", "value", "status", "residual"]
    assert not out.startswith("#")


def test_regularize_ladder(capsys):
    code, out, _ = run(capsys, "regularize", "--expr", "x^0.3 + x^0.5 + x", "--ladder", "0.3,0.5", "--n", "1",
                       "--output", "csv")
    assert code == 0
    assert abs(float(rows_by_quantity(out)["regularized_fwd"]["value"])) < 1e-6


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "holderkit", "velocity", "--expr", "x^0.3", "--beta", "0.5"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 2
    assert "diverged" in proc.stdout
