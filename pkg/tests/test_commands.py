import json
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from twistcoh import main as main_module
from twistcoh.cli.commands import EXIT_ERROR, EXIT_OK, EXIT_USAGE, run
from twistcoh.main import main
from twistcoh.schemas.common import ErrorReport


def ok(argv: list[str]) -> dict:
    report, code, _ = run(argv)
    assert code == EXIT_OK
    assert report is not None
    return json.loads(report.model_dump_json())


class TestCommands:
    def test_resolve(self) -> None:
        data = ok(["resolve", "M", "--steps", "3"])
        assert data["ranks"] == [1, 1, 1, 1]
        assert data["lengths"] == [4, 4, 4, 4]
        assert data["projective_dimension"] is None

    def test_resolve_exports_differentials(self) -> None:
        data = ok(["resolve", "M", "--steps", "2"])
        d1, d2 = (
            np.array([[Fraction(v) for v in row] for row in d], dtype=object)
            for d in data["differentials"]
        )
        assert d1.shape == d2.shape == (4, 4)
        assert (d1 != 0).any()
        assert not (d1 @ d2 != 0).any()

    def test_resolve_zero_steps(self) -> None:
        data = ok(["resolve", "k", "--steps", "0"])
        assert data["ranks"] == [1]
        assert data["differentials"] == []

    def test_resolve_with_growth(self) -> None:
        data = ok(["resolve", "k", "--steps", "2", "--window", "8"])
        assert data["growth"]["gamma"] == 2

    def test_ext(self) -> None:
        data = ok(["ext", "M", "--twist", "nu", "--t", "2", "--max-degree", "3"])
        assert data["degrees"] == [0, 2, 4, 6]
        assert data["dims"] == [1, 1, 1, 1]

    def test_hochschild(self) -> None:
        data = ok(["hochschild", "--twist", "nu", "--t", "2", "--max-degree", "4"])
        assert data["dims"] == [2, 0, 1, 0, 1]
        assert data["method"] == "builtin"
        assert data["associative"] is None

    def test_hochschild_products(self) -> None:
        data = ok(["hochschild", "--twist", "nu", "--t", "2", "--max-degree", "2", "--products"])
        assert data["associative"] is True
        assert data["products"]

    def test_strong_check(self) -> None:
        data = ok(["strong-check", "--twist", "nu", "--t", "2", "--index", "2", "--n", "2"])
        assert data["degree"] == 4
        assert data["strong"] is True

    def test_periodicity(self) -> None:
        data = ok(["periodicity", "M", "--twist", "nu", "--t", "2", "--max-shift", "1"])
        assert data["found"] is True
        assert (data["shift"], data["period"]) == (0, 1)

    def test_periodicity_of_projective(self) -> None:
        data = ok(["periodicity", "L", "--twist", "nu", "--t", "2"])
        assert data["found"] is False
        assert data["note"] == "finite projective dimension"

    def test_fg_check(self) -> None:
        assert ok(["fg-check", "M", "--twist", "nu", "--t", "2"])["verdict"] == "pass_evidence"
        data = ok(["fg-check", "M10", "--twist", "nu", "--t", "2"])
        assert data["verdict"] == "fail_witness"
        assert data["witness"]["kind"] == "annihilated"

    def test_variety_dim(self) -> None:
        data = ok(["variety-dim", "M", "--twist", "nu", "--t", "2", "--window", "6"])
        assert data["dim"] == 1
        assert data["trivial"] is False

    def test_nakayama(self) -> None:
        data = ok(["nakayama"])
        assert data["form"] == ["0", "0", "0", "1"]
        assert data["matrix"][1][1] == "-1/2"
        assert data["matrix"][2][2] == "-2"
        assert data["center_dim"] == 2

    def test_reduce(self) -> None:
        data = ok(["reduce", "M", "--twist", "nu", "--t", "2", "--index", "2"])
        assert data["k_eta_dim"] == 32
        assert data["sequence_exact"] is True
        assert data["tensor_sequence_exact"] is True

    def test_builtin_files_parse_back(self, tmp_path: Path) -> None:
        data = ok(["builtin", "--out", str(tmp_path)])
        path = tmp_path / "lambda_q.txt"
        assert path.read_text(encoding="utf-8") == data["files"]["lambda_q.txt"]
        again = ok(["-f", str(path), "resolve", "M", "--steps", "2"])
        assert again["ranks"] == [1, 1, 1]


class TestFailures:
    def test_unknown_module(self) -> None:
        report, code, _ = run(["resolve", "nope"])
        assert code == EXIT_ERROR
        assert isinstance(report, ErrorReport)
        assert report.error.type == "DanglingReferenceError"

    def test_bad_parameter(self) -> None:
        report, code, _ = run(["--q", "1", "resolve", "M"])
        assert code == EXIT_ERROR
        assert isinstance(report, ErrorReport)
        assert report.error.type == "BadParamsError"

    def test_builtin_over_prime_field(self) -> None:
        report, code, _ = run(["--field", "F7", "--q", "3", "resolve", "M"])
        assert code == EXIT_ERROR
        assert isinstance(report, ErrorReport)
        assert report.error.type == "BadParamsError"

    def test_reduce_basis_out_of_range(self) -> None:
        argv = ["reduce", "M", "--twist", "nu", "--t", "2", "--index", "2", "--basis", "5"]
        report, code, _ = run(argv)
        assert code == EXIT_ERROR
        assert isinstance(report, ErrorReport)
        assert report.error.type == "HochschildError"

    def test_unwritable_json_path(self, tmp_path: Path) -> None:
        path = tmp_path / "missing" / "report.json"
        report, code, _ = run(["--json", str(path), "resolve", "M", "--steps", "1"])
        assert code == EXIT_ERROR
        assert isinstance(report, ErrorReport)
        assert report.error.type == "FileNotFoundError"

    def test_builtin_out_is_a_file(self, tmp_path: Path) -> None:
        target = tmp_path / "taken"
        target.write_text("", encoding="utf-8")
        report, code, _ = run(["builtin", "--out", str(target)])
        assert code == EXIT_ERROR
        assert isinstance(report, ErrorReport)
        assert report.error.type == "FileExistsError"

    @pytest.mark.parametrize(
        "argv",
        [[], ["resolve"], ["resolve", "M", "--steps", "-1"], ["ext", "M", "--t", "0"], ["bogus"]],
    )
    def test_usage(self, argv: list[str]) -> None:
        report, code, usage = run(argv)
        assert code == EXIT_USAGE
        assert report is None
        assert "usage:" in usage


class TestOutput:
    def test_byte_stable(self) -> None:
        argv = ["hochschild", "--twist", "nu", "--t", "2", "--max-degree", "2", "--products"]
        first, _, _ = run(argv)
        second, _, _ = run(argv)
        assert first is not None
        assert second is not None
        assert first.model_dump_json(indent=2) == second.model_dump_json(indent=2)

    def test_json_file(self, tmp_path: Path) -> None:
        path = tmp_path / "report.json"
        report, _, _ = run(["--json", str(path), "resolve", "M", "--steps", "1"])
        assert report is not None
        assert json.loads(path.read_text(encoding="utf-8")) == json.loads(
            report.model_dump_json()
        )

    def test_main_writes_stdout(self, capsys: pytest.CaptureFixture[str]) -> None:
        assert main(["resolve", "M", "--steps", "1"]) == EXIT_OK
        data = json.loads(capsys.readouterr().out)
        assert data["command"] == "resolve"
        assert data["schema_version"] == "1"

    def test_main_usage(self, capsys: pytest.CaptureFixture[str]) -> None:
        assert main(["resolve"]) == EXIT_USAGE
        assert "usage:" in capsys.readouterr().err

    def test_main_sets_up_tracing_when_enabled(self, monkeypatch: pytest.MonkeyPatch) -> None:
        calls: list[bool] = []
        monkeypatch.setattr(main_module.settings, "otlp_enabled", True)
        monkeypatch.setattr(main_module, "setup_tracing", lambda: calls.append(True))
        assert main(["nakayama"]) == EXIT_OK
        assert calls == [True]
