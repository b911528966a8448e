import json

import numpy as np
import pytest

from qflag.characters import TGrid, kr_character
from qflag.cli import build_parser, parse_magnons, run
from qflag.errors import NoPolynomialSolution, SchemaError
from qflag.lie_core import build_cartan, parse_algebra


def test_algebra_info_json(capsys):
    assert run(["--json", "algebra", "info", "--series", "E", "--rank", "6"]) == 0
    info = json.loads(capsys.readouterr().out)
    assert info["coxeter_number"] == 12
    assert info["positive_roots"] == 36


def test_algebra_info_table():
    assert run(["algebra", "info", "--series", "A", "--rank", "3"]) == 0


def test_invalid_algebra_is_a_usage_error():
    assert run(["algebra", "info", "--series", "D", "--rank", "2"]) == 2


def test_lambda_spectrum_json(capsys):
    assert run(["--json", "lambda-spectrum", "--series", "D", "--rank", "4"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["dimension"] == 8
    assert data["gamma_closed"] is True


@pytest.mark.parametrize("suite,series,rank", [("clifford", "D", 4), ("chevalley", "A", 3), ("lambda", "D", 5)])
def test_verify_static_suites(capsys, suite, series, rank):
    assert run(["--json", "verify", suite, "--series", series, "--rank", str(rank)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["reports"]
    assert all(r["passed"] for r in report["reports"])


def test_qsystem_build_then_verify(tmp_path):
    path = tmp_path / "system.json"
    assert run(["--seed", "5", "qsystem", "build", "--series", "D", "--rank", "4", "-o", str(path)]) == 0
    assert path.exists()
    assert run(["qsystem", "verify", "--system", str(path), "--suite", "qq"]) == 0


def test_hirota_on_grid_file(tmp_path):
    cartan = build_cartan(parse_algebra("A", 1))
    logs = np.array([0.5j, -0.5j])

    def value(a, s, shift):
        return np.full(3, kr_character(cartan, a, s, logs), dtype=complex)

    points = np.array([0.1, 0.2j, -0.4])
    model = TGrid(cartan=cartan, smax=3, samples=3, value=value).to_model(points, degree=0)
    path = tmp_path / "grid.json"
    path.write_text(model.model_dump_json())
    assert run(["hirota", "--grid", str(path)]) == 0


def test_malformed_chain_file(tmp_path):
    path = tmp_path / "chain.json"
    path.write_text(json.dumps({"series": "D", "rank": 3, "L": 2, "site_labels": [[1, 0, 0]], "thetas": [], "twist": []}))
    assert run(["chain", "solve", "--spec", str(path), "--magnons", "0,0,0"]) == 2


def test_missing_file(tmp_path):
    assert run(["qsystem", "verify", "--system", str(tmp_path / "absent.json")]) == 2


def test_bad_seed_environment(monkeypatch):
    monkeypatch.setenv("QFLAG_SEED", "seven")
    assert run(["algebra", "info"]) == 2


def test_parse_magnons():
    assert parse_magnons("1,0,2", 3) == [1, 0, 2]
    with pytest.raises(SchemaError):
        parse_magnons("1,x", 2)
    with pytest.raises(SchemaError):
        parse_magnons("1,0", 3)


def test_parser_requires_a_command():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])


def test_corrupted_system_fails(tmp_path, capsys):
    path = tmp_path / "system.json"
    assert run(["--seed", "5", "qsystem", "build", "--series", "D", "--rank", "4", "-o", str(path)]) == 0
    data = json.loads(path.read_text())
    re, im = data["base"]["vector"][0]["coeffs"][0]
    data["base"]["vector"][0]["coeffs"][0] = [re + 0.5, im]
    path.write_text(json.dumps(data))
    capsys.readouterr()
    assert run(["--json", "qsystem", "verify", "--system", str(path)]) == 1
    report = json.loads(capsys.readouterr().out)
    assert not report["passed"]


def test_reports_are_reproducible(capsys):
    outputs = []
    for _ in range(2):
        assert run(["--json", "--seed", "7", "verify", "chevalley", "--series", "D", "--rank", "4"]) == 0
        report = json.loads(capsys.readouterr().out)
        for r in report["reports"]:
            r["elapsed"] = 0.0
        outputs.append(report)
    assert outputs[0] == outputs[1]
    assert outputs[0]["seed"] == 7


def test_failed_construction_is_not_a_usage_error(monkeypatch, capsys):
    def unsolvable(rank, rng):
        raise NoPolynomialSolution("no chain solution")

    monkeypatch.setattr("qflag.cli.random_system_D", unsolvable)
    assert run(["verify", "qq", "--series", "D", "--rank", "4"]) == 1
    assert "Failed" in capsys.readouterr().out


def test_verify_random_d_system(capsys):
    assert run(["--json", "--seed", "3", "verify", "qq", "--series", "D", "--rank", "4"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert [r["relation"] for r in report["reports"]] == [f"qq.node{a}" for a in range(1, 5)]


def test_chain_solve_reports_hirota(tmp_path, capsys):
    path = tmp_path / "chain.json"
    phases = [0.4, 1.3, -2.1]
    path.write_text(
        json.dumps(
            {
                "series": "D",
                "rank": 3,
                "L": 2,
                "site_labels": [[1, 0, 0], [1, 0, 0]],
                "thetas": [[0.1, 0.0], [-0.45, 0.0]],
                "twist": [[float(np.cos(p)), float(np.sin(p))] for p in phases],
            }
        )
    )
    assert run(["--json", "--seed", "3", "chain", "solve", "--spec", str(path), "--magnons", "1,0,0"]) == 0
    reports = {r["relation"]: r for r in json.loads(capsys.readouterr().out)["reports"]}
    assert "hirota.0" in reports
    hirota = [r for name, r in reports.items() if name.startswith("hirota.")]
    assert all(r["passed"] and r["details"]["sourced"] for r in hirota)
    assert len(hirota) == len([name for name in reports if name.startswith("bethe.")])
