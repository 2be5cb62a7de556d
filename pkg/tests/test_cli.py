import csv
import json
import subprocess
import sys
from fractions import Fraction

import pytest

from bdyamabe.cli import EXPECTED, compare, computed_constants, dumps, main
from bdyamabe.scalars import ExactScalar


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


def test_default_verification_all_exact(capsys):
    code, rep = run(capsys, "verify-constants")
    assert code == 0
    assert rep["schema"] == 1 and rep["all_pass"]
    rows = rep["rows"]["5"]
    assert rows and all(r["match"] == "exact" for r in rows)


def test_tampered_table_fails(tmp_path, capsys):
    table = {"5": {name: {"expected": exp, "anchor": anchor} for name, (exp, anchor) in EXPECTED[5].items()}}
    name = next(iter(table["5"]))
    table["5"][name]["expected"] = "7/3 + 0/1*pi"
    path = tmp_path / "expected.json"
    path.write_text(json.dumps(table))
    code, rep = run(capsys, "verify-constants", "--expected", str(path))
    assert code == 1
    failed = [r for r in rep["rows"]["5"] if r["match"] == "FAIL"]
    assert [r["name"] for r in failed] == [name]
    assert not rep["all_pass"]


def test_malformed_expected_value_is_a_failure_row():
    rows = compare({"x": ("not a number", "")}, {"x": ExactScalar.coerce(Fraction(1))})
    assert rows[0].match == "FAIL"
    rows = compare({"y": ("1/2 + 0/1*pi", "")}, {})
    assert rows[0].computed == "missing" and rows[0].match == "FAIL"


def test_n4_reports_delta_gain_mismatch(capsys):
    code, rep = run(capsys, "verify-constants", "--dim", "4")
    rows = {r["name"]: r for r in rep["rows"]["4"]}
    assert rows["delta_gain"]["match"] == "FAIL"
    assert rows["delta_gain"]["computed"].startswith("4/15")
    assert rows["delta_gain_pi_part"]["match"] == "exact"
    assert rep["n4_delta_pieces"]["total_with_positive_source"].startswith("64/105")
    assert code == 1


def test_n6_summary_reports_point_and_maximizer(capsys):
    code, rep = run(capsys, "verify-constants", "--dim", "6")
    n6 = rep["n6"]
    assert n6["chosen_point"] == ["-128/7", "544/35"]
    assert n6["chosen_point_is_maximizer"] is True
    assert n6["value_at_chosen_point_S4_units"].replace(" ", "") in {"0/1+31/78400*pi", "31/78400*pi"}
    assert code == 0


def test_optimize_n5(capsys):
    code, rep = run(capsys, "optimize", "--dim", "5")
    assert code == 0
    assert rep["argmax"] == ["-63/4", "105/8"]
    assert rep["value"].startswith("3/2560") and rep["unit"] == "|S^3|"


def test_pohozaev_bubble_and_csv(tmp_path, capsys):
    path = tmp_path / "sweep.csv"
    code, rep = run(capsys, "pohozaev", "--profile", "bubble", "--rho", "0.5,1,2", "--csv", str(path))
    assert code == 0
    assert all(c["pass"] for c in rep["checks"]) and len(rep["checks"]) == 3
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["rho", "P_prime", "P", "error"] and len(rows) == 4


def test_pohozaev_tolerance_controls_exit(capsys):
    code, _ = run(capsys, "pohozaev", "--profile", "bubble", "--tol", "0")
    assert code == 1


def test_mass_flux_coefficient_check(capsys):
    code, rep = run(capsys, "mass-flux", "--dim", "5")
    assert code == 0
    assert rep["checks"][0]["computed"] == rep["checks"][0]["expected"]


def test_solve_linearized_json_and_csv(tmp_path, capsys):
    path = tmp_path / "field.csv"
    code, rep = run(capsys, "solve-linearized", "--dim", "5", "--eps", "0.01", "--nr", "65", "--nt", "65",
                    "--csv", str(path))
    assert code == 0
    report = rep["report"]
    assert report["energy_ok"] and report["grid"] == [65, 65]
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["r", "t", "u"] and len(rows) == 1 + 65 * 65


def test_output_dir_environment(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("BDYAMABE_OUTPUT_DIR", str(tmp_path))
    code = main(["optimize", "--output", "reports/opt.json"])
    assert code == 0 and capsys.readouterr().out == ""
    assert json.loads((tmp_path / "reports" / "opt.json").read_text())["command"] == "optimize"


def test_output_is_byte_identical(tmp_path):
    texts = []
    for k in range(2):
        out = tmp_path / f"run{k}.json"
        assert main(["mass-flux", "--random-jet", "--seed", "4", "--rho", "0.5,1", "-o", str(out)]) == 0
        texts.append(out.read_bytes())
    assert texts[0] == texts[1]


def test_config_errors_exit_2(capsys):
    assert main(["solve-linearized", "--R", "5", "--nr", "65", "--nt", "65"]) == 2
    assert "need R" in capsys.readouterr().err
    with pytest.raises(SystemExit) as exc:
        main(["optimize", "--dim", "7"])
    assert exc.value.code == 2


def test_float_rounding_and_negative_zero():
    text = dumps({"a": -0.0, "b": 0.1 + 0.2})
    data = json.loads(text)
    assert data == {"schema": 1, "a": 0.0, "b": 0.3}


def test_computed_constants_cover_expected_table():
    for N, table in EXPECTED.items():
        assert set(table) <= set(computed_constants(N))


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "bdyamabe", "optimize", "--dim", "6"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["argmax"] == ["-128/7", "544/35"]
