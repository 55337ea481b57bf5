"""End-to-end CLI behavior through in-process main(argv) calls."""

import json

import numpy as np
import pytest

from conftest import dump_cone
from wsosbound.cli import main
from wsosbound.cones import build_interval_cone

T5 = ["1", "-1", "1", "1", "-1"]


def write_problem(tmp_path, name="problem.json", **overrides):
    data = {
        "basis": "monomial",
        "degree": 2,
        "cone": "interval-even",
        "coeffs": T5,
        "solver": {"epsilon": 1e-4},
    }
    data.update(overrides)
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


def test_bound_reports_certified_result(tmp_path, capsys):
    path = write_problem(tmp_path)
    code, rep = run(capsys, "bound", path)
    assert code == 0
    assert rep["verified"] is True
    assert rep["status"] == "optimal"
    assert rep["gap_guarantee"] is True
    assert rep["gap_bound"] <= 1e-4
    assert rep["iterations"] >= 1
    b = rep["bound"]
    assert b["decimal"] == pytest.approx(b["num"] / b["den"])
    assert len(rep["certificate"]) == 5
    assert all(set(e) == {"num", "den"} for e in rep["certificate"])


def test_bound_output_is_deterministic(tmp_path, capsys):
    path = write_problem(tmp_path)
    main(["bound", path])
    first = capsys.readouterr().out
    main(["bound", path])
    second = capsys.readouterr().out
    assert first == second


def test_bound_writes_trace_and_figure(tmp_path, capsys):
    path = write_problem(tmp_path)
    trace = tmp_path / "run.jsonl"
    code, rep = run(capsys, "bound", path, "--trace", str(trace))
    assert code == 0
    assert rep["trace_path"] == str(trace)
    lines = trace.read_text().splitlines()
    assert len(lines) == rep["iterations"] + 1
    assert all(set(json.loads(s)) == {"iter", "c", "delta_c", "residual_norm"}
               for s in lines)
    figure = tmp_path / "run.png"
    assert rep["figure_path"] == str(figure)
    assert figure.read_bytes()[1:4] == b"PNG"


def test_bound_exact_mode_verifies_every_iterate(tmp_path, capsys):
    path = write_problem(tmp_path)
    code, rep = run(capsys, "bound", path, "--mode", "exact")
    assert code == 0
    iv = rep["iterates_verified"]
    assert iv["checked"] == rep["iterations"] + 1
    assert iv["certified"] == iv["checked"]


def test_verify_accepts_report_and_rejects_corruption(tmp_path, capsys):
    path = write_problem(tmp_path)
    code, rep = run(capsys, "bound", path)
    assert code == 0
    report = tmp_path / "report.json"
    report.write_text(json.dumps(rep))
    code, out = run(capsys, "verify", path, "--report", str(report))
    assert code == 0
    assert out["verdict"] == "certified"

    rep["bound"]["num"] += rep["bound"]["den"]  # push the bound above the minimum
    report.write_text(json.dumps(rep))
    code, out = run(capsys, "verify", path, "--report", str(report))
    assert code == 1
    assert out["verdict"] == "rejected"
    assert out["reason"]


def test_verify_pair_embedded_in_problem_file(tmp_path, capsys):
    path = write_problem(tmp_path)
    code, rep = run(capsys, "bound", path)
    bound = f'{rep["bound"]["num"]}/{rep["bound"]["den"]}'
    cert = [f'{e["num"]}/{e["den"]}' for e in rep["certificate"]]
    pair = write_problem(tmp_path, name="pair.json", bound=bound, certificate=cert)
    code, out = run(capsys, "verify", pair)
    assert code == 0
    assert out["verdict"] == "certified"


def test_decompose_emits_rational_squares(tmp_path, capsys):
    path = write_problem(tmp_path)
    code, rep = run(capsys, "bound", path)
    report = tmp_path / "report.json"
    report.write_text(json.dumps(rep))
    code, dec = run(capsys, "decompose", path, "--report", str(report))
    assert code == 0
    assert dec["bound"] == {"num": rep["bound"]["num"], "den": rep["bound"]["den"]}
    assert dec["terms"]
    for term in dec["terms"]:
        assert set(term) == {"weight_index", "lambda", "square"}
        assert term["lambda"]["num"] > 0
        assert term["square"]


def test_constants_closed_form_chebyshev(tmp_path, capsys):
    path = write_problem(tmp_path, basis="chebyshev")
    code, out = run(capsys, "constants", path)
    assert code == 0
    assert out["rho"] == {"num": 1, "den": 20, "decimal": 0.05}
    assert out["nu"] == 5
    assert out["k1"] == {"num": 1, "den": 1, "decimal": 1.0}
    assert out["k3"] == {"num": 3, "den": 1, "decimal": 3.0}
    assert out["provenance"]["C_lower"] == "closed-form"
    assert out["gap_guarantee_available"] is True

    code, out = run(capsys, "constants", path, "--r", "1/6")
    assert out["rho"]["num"] == 2 and out["rho"]["den"] == 21


def test_bound_on_custom_cone_file(tmp_path, capsys):
    cone_data = dump_cone(build_interval_cone(1))
    cone_data["interior_point"] = ["2", "0", "2/3"]
    (tmp_path / "cone.json").write_text(json.dumps(cone_data))
    path = write_problem(
        tmp_path,
        name="custom.json",
        cone={"custom-file": "cone.json"},  # resolved relative to the problem file
        coeffs=["0", "1", "1"],
    )
    code, rep = run(capsys, "bound", path)
    assert code == 0
    assert rep["status"] == "certified"
    assert rep["gap_guarantee"] is False
    assert rep["bound"]["decimal"] <= -0.25 + 1e-6

    code, out = run(capsys, "constants", path)
    assert code == 0
    assert out["gap_guarantee_available"] is False
    assert "k2" not in out


def test_bound_without_stopping_constant(tmp_path, capsys):
    path = write_problem(tmp_path)
    code, rep = run(capsys, "bound", path, "--C", "none")
    assert code == 0
    assert rep["status"] == "certified"
    assert rep["gap_guarantee"] is False
    assert rep["gap_bound"] is None


def test_exit_code_two_on_bad_input(tmp_path, capsys):
    assert main(["bound", str(tmp_path / "missing.json")]) == 2
    capsys.readouterr()

    bad_rational = write_problem(tmp_path, name="bad1.json", coeffs=["1.5", "0", "0", "0", "0"])
    assert main(["bound", bad_rational]) == 2
    capsys.readouterr()

    wrong_count = write_problem(tmp_path, name="bad2.json", coeffs=["1", "2"])
    assert main(["bound", wrong_count]) == 2
    capsys.readouterr()

    bad_cone = write_problem(tmp_path, name="bad3.json", cone="simplex")
    assert main(["bound", bad_cone]) == 2
    capsys.readouterr()

    bad_solver = write_problem(tmp_path, name="bad4.json", solver={"epsilon": -1})
    assert main(["bound", bad_solver]) == 2
    capsys.readouterr()

    path = write_problem(tmp_path, name="bad5.json")
    assert main(["constants", path, "--r", "1/2"]) == 2
    capsys.readouterr()


def test_verify_without_pair_is_an_input_error(tmp_path, capsys):
    path = write_problem(tmp_path)
    assert main(["verify", path]) == 2
    capsys.readouterr()
