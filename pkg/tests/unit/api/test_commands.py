import json
import shutil
from unittest.mock import MagicMock, patch

import pytest

from fundsol.api.commands import (
    cmd_constants,
    cmd_eval,
    cmd_verify,
    load_config,
    load_test_functions,
    render_summary,
    write_report,
)
from fundsol.main import COMMANDS, EXIT_DEGENERATE, EXIT_ERROR, EXIT_FAILED_CHECK, EXIT_OK, main
from fundsol.schemas.run import Budgets, Variant


@pytest.fixture
def config_file(tmp_path, config_dir):
    (tmp_path / "symbols").mkdir()
    shutil.copy(config_dir / "symbols" / "wave.json", tmp_path / "symbols" / "wave.json")
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"symbol": "symbols/wave.json", "variant": "theorem"}))
    return path


def test_load_config_resolves_the_symbol(config_file):
    config = load_config(config_file)
    assert config.symbol == (config_file.parent / "symbols" / "wave.json").resolve()
    assert config.symbol.is_file()


def test_config_file_wins_over_flags(config_file, tmp_path):
    config = load_config(config_file, variant="proof", seed=5, out=tmp_path / "out", convergence=None)

    # Verify the result: the file sets the variant, the flags fill the rest
    assert config.variant == Variant.THEOREM
    assert config.seed == 5
    assert config.out == tmp_path / "out"
    assert config.convergence is False


def test_acceptance_functions_follow_the_dimension(config_file):
    config = load_config(config_file)
    functions = load_test_functions(config, 2)
    assert [f.label for f in functions] == ["g0", "g1", "g2"]
    assert all(f.dimension == 2 for f in functions)


def test_cmd_constants():
    report = cmd_constants()
    assert [entry.k for entry in report.table] == list(range(1, 9))
    assert all(entry.max_relative_error <= 1e-10 for entry in report.table)
    assert report.provenance.command == "constants"


def test_write_report(tmp_path):
    report = cmd_constants()
    json_path, text_path = write_report(report, tmp_path / "out", "constants")

    # Verify the result
    assert json.loads(json_path.read_text())["table"][0]["k"] == 1
    assert text_path.read_text() == render_summary(report) + "\n"
    assert text_path.read_text().splitlines()[0].split() == ["k", "constant", "closed", "form", "numerical", "rel.", "error"]


def test_main_constants(tmp_path):
    assert main(["constants", "--out", str(tmp_path)]) == EXIT_OK
    assert (tmp_path / "constants_report.json").is_file()
    assert (tmp_path / "constants_summary.txt").is_file()


def test_main_validate(config_dir, tmp_path):
    assert main(["validate", "--config", str(config_dir / "wave.json"), "--out", str(tmp_path)]) == EXIT_OK
    report = json.loads((tmp_path / "validate_report.json").read_text())
    assert report["validation"]["passes_h"] is True


def test_main_degenerate_symbol(config_dir, tmp_path):
    argv = ["validate", "--config", str(config_dir / "degenerate3d.json"), "--out", str(tmp_path)]
    assert main(argv) == EXIT_DEGENERATE


def test_main_missing_config(tmp_path):
    assert main(["validate", "--config", str(tmp_path / "missing.json")]) == EXIT_ERROR


def test_main_failed_verification(config_dir, tmp_path):
    verify = MagicMock(return_value=MagicMock(passed=False))
    with patch.dict(COMMANDS, {"verify": verify}), patch("fundsol.main.write_report"), patch(
        "fundsol.main.render_summary", return_value=""
    ):
        code = main(["verify", "--config", str(config_dir / "wave.json"), "--out", str(tmp_path)])
    assert code == EXIT_FAILED_CHECK
    verify.assert_called_once()


@pytest.mark.slow
def test_main_eval(config_dir, tmp_path):
    assert main(["eval", "--config", str(config_dir / "hyperbolic2d.json"), "--out", str(tmp_path)]) == EXIT_OK
    report = json.loads((tmp_path / "eval_report.json").read_text())
    assert [r["test_function"] for r in report["results"]] == ["g0", "g1", "g2"]
    assert all(r["case"] == "B" for r in report["results"])
    assert all((tmp_path / "scans" / f"{label}.csv").is_file() for label in ("g0", "g1", "g2"))


@pytest.mark.slow
@pytest.mark.parametrize("name", ["wave", "hyperbolic2d", "cubic3d"])
def test_eval_against_golden(config_dir, golden_dir, tmp_path, name):
    golden = json.loads((golden_dir / f"{name}.json").read_text())
    report = cmd_eval(load_config(config_dir / golden["config"], out=tmp_path))
    tolerance = golden["tolerance"]

    # Verify the result
    assert [r.test_function for r in report.results] == [g["test_function"] for g in golden["results"]]
    for result, expected in zip(report.results, golden["results"]):
        f0 = expected["f_at_zero"]
        assert result.case == golden["case"]
        assert result.f_at_zero.value == pytest.approx(f0, rel=1e-12)
        assert abs(result.value.imag) <= tolerance * f0
        if expected["value"] is not None:
            scale = max(abs(expected["value"]), f0)
            assert abs(result.value.value - expected["value"]) <= tolerance * scale
        if "null_value" in expected:
            assert abs(result.null_value.value - expected["null_value"]) <= tolerance * f0


@pytest.mark.slow
def test_verify_is_deterministic(config_dir, tmp_path):
    config = load_config(config_dir / "hyperbolic2d.json", out=tmp_path, budgets=Budgets(sample_budget=4000))
    first = cmd_verify(config)
    second = cmd_verify(config)

    # Verify the result: same seed, same report; the symmetric acceptance centers keep the slope link
    assert first.model_dump_json() == second.model_dump_json()
    checks = {check.name: check for check in first.checks}
    assert checks["slope-link"].passed
    assert all(checks[f"quasi-homogeneity/g{i}"].passed for i in range(3))
