"""
End-to-end tests of the command-line entry point and staged output files.
"""

import sys
import os

# Add parent directory to path to import core modules
parent_dir = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, parent_dir)

# Use test configuration (console logging only, no file requirement)
sys.path.insert(0, os.path.dirname(__file__))
import config_test  # Import test config first to set up logging

import json

import pytest

from errors import TheoremViolation
from main import main
from reports import read_csv_rows
from sample_test_data import (SAMPLE_DIAGONAL_ALGEBRA_JSON, SAMPLE_MALFORMED_JSON, SAMPLE_RHO_JSON,
                              SAMPLE_SIGMA_JSON, SAMPLE_UNNORMALIZED_JSON)
from staging import staged_output, staging_path


@pytest.fixture
def inputs(tmp_path):
    """Write the qubit example to disk and return the three paths."""
    paths = {}
    for name, body in (("rho", SAMPLE_RHO_JSON), ("sigma", SAMPLE_SIGMA_JSON),
                       ("algebra", SAMPLE_DIAGONAL_ALGEBRA_JSON)):
        path = tmp_path / f"{name}.json"
        path.write_text(body)
        paths[name] = str(path)
    return paths


def _stdout_json(capsys):
    return json.loads(capsys.readouterr().out)


def test_check_qubit_example(inputs, capsys):
    code = main(["check", "--rho", inputs["rho"], "--sigma", inputs["sigma"], "--algebra", inputs["algebra"]])
    assert code == 0
    document = _stdout_json(capsys)
    assert document["gap"] == pytest.approx(0.130812, abs=1e-6)
    assert document["quantities"]["delta_norm"] == pytest.approx(2.0)
    assert document["violations"] == {}
    assert document["equality"]["is_equality_case"] is False
    assert document["identities"]["max_gap_residual"] < 1e-9


def test_check_identical_states(inputs, capsys):
    code = main(["check", "--rho", inputs["rho"], "--sigma", inputs["rho"], "--algebra", inputs["algebra"]])
    assert code == 0
    document = _stdout_json(capsys)
    assert abs(document["gap"]) < 1e-12
    assert document["equality"]["is_equality_case"] is True
    # below the residual threshold the ratio is undefined
    assert document["pinsker2_ratio"] is None


def test_check_writes_through_staging(inputs, tmp_path):
    out = str(tmp_path / "report.json")
    code = main(["check", "--rho", inputs["rho"], "--sigma", inputs["sigma"], "--algebra", inputs["algebra"],
                 "--out", out])
    assert code == 0
    assert os.path.exists(out)
    assert not os.path.exists(staging_path(out))
    with open(out) as handle:
        assert json.load(handle)["gap"] == pytest.approx(0.130812, abs=1e-6)


def test_malformed_json_exits_with_parse_error(inputs, tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(SAMPLE_MALFORMED_JSON)
    code = main(["check", "--rho", str(bad), "--sigma", inputs["sigma"], "--algebra", inputs["algebra"]])
    assert code == 2
    error = _stdout_json(capsys)["error"]
    assert error["kind"] == "parse"
    # paths are redacted from printed messages
    assert str(tmp_path) not in error["message"]


def test_unnormalized_state_exits_with_validation_error(inputs, tmp_path, capsys):
    bad = tmp_path / "sigma.json"
    bad.write_text(SAMPLE_UNNORMALIZED_JSON)
    code = main(["check", "--rho", inputs["rho"], "--sigma", str(bad), "--algebra", inputs["algebra"]])
    assert code == 2
    error = _stdout_json(capsys)["error"]
    assert error["kind"] == "validation"
    assert error["type"] == "NotNormalized"


@pytest.mark.parametrize("body", ["[1, 2, 3]", "4", '"diagonal"'])
def test_algebra_file_that_is_not_an_object_exits_with_parse_error(inputs, tmp_path, capsys, body):
    bad = tmp_path / "alg_list.json"
    bad.write_text(body)
    code = main(["check", "--rho", inputs["rho"], "--sigma", inputs["sigma"], "--algebra", str(bad)])
    assert code == 2
    error = _stdout_json(capsys)["error"]
    assert error["kind"] == "parse"
    assert error["type"] == "ParseError"


def test_structure_of_qubit_example(inputs, capsys):
    code = main(["structure", "--rho", inputs["rho"], "--algebra", inputs["algebra"], "--seed", "4"])
    assert code == 0
    document = _stdout_json(capsys)
    assert document["fixed_point_dim"] == 1
    assert document["message"] == "equality forces sigma = rho"
    assert document["blocks"] == [{"d_left": 2, "d_right": 1, "weight": pytest.approx(1.0)}]
    assert document["equality_sample"]["petz_trace_residual"] < 1e-9


def test_takesaki_command(inputs, capsys):
    code = main(["takesaki", "--rho", inputs["rho"], "--algebra", inputs["algebra"]])
    assert code == 0
    document = _stdout_json(capsys)
    assert document["is_real"] is False
    assert document["delta_invariant"] is False
    assert document["is_conditional_expectation"] is False
    assert document["flags_consistent"] is True


def test_sweep_is_reproducible_across_thread_counts(tmp_path):
    first = str(tmp_path / "first.csv")
    second = str(tmp_path / "second.csv")
    base = ["sweep", "--dim", "3", "--algebra", "diagonal", "--samples", "6", "--seed", "42"]
    assert main(base + ["--out", first]) == 0
    assert main(base + ["--threads", "3", "--out", second]) == 0
    with open(first, "rb") as a, open(second, "rb") as b:
        assert a.read() == b.read()
    assert not os.path.exists(staging_path(first))

    with open(first) as handle:
        assert handle.readline().startswith("# dpi-stability sweep v1 columns=instance,seed,gap")
    rows = read_csv_rows(first)
    assert list(rows["instance"]) == list(range(6))
    assert (rows["gap"] >= -1e-9).all()


def test_sweep_with_algebra_file(inputs, tmp_path):
    out = str(tmp_path / "sweep.csv")
    assert main(["sweep", "--dim", "2", "--algebra", inputs["algebra"], "--samples", "3", "--out", out]) == 0
    assert len(read_csv_rows(out)) == 3


def test_sweep_dimension_mismatch(inputs, capsys):
    assert main(["sweep", "--dim", "3", "--algebra", inputs["algebra"], "--samples", "2"]) == 2
    assert _stdout_json(capsys)["error"]["type"] == "DimensionMismatch"


def test_sweep_rejects_algebra_file_that_is_not_an_object(tmp_path, capsys):
    bad = tmp_path / "alg_list.json"
    bad.write_text("[1, 2, 3]")
    assert main(["sweep", "--dim", "2", "--algebra", str(bad), "--samples", "2"]) == 2
    assert _stdout_json(capsys)["error"]["kind"] == "parse"


def test_ssa_command(tmp_path):
    out = str(tmp_path / "ssa.csv")
    assert main(["ssa", "--dims", "2,2,2", "--samples", "4", "--seed", "9", "--out", out]) == 0
    rows = read_csv_rows(out)
    assert len(rows) == 4
    assert (rows["identity_residual"] < 1e-9).all()


def test_ssa_rejects_bad_dims(capsys):
    assert main(["ssa", "--dims", "2,2"]) == 2
    assert _stdout_json(capsys)["error"]["kind"] == "validation"


def test_oracle_command(tmp_path):
    out = str(tmp_path / "oracle.csv")
    assert main(["oracle", "--omega", "6", "--samples", "5", "--seed", "1", "--out", out]) == 0
    rows = read_csv_rows(out)
    assert len(rows) == 5
    assert (rows["max_discrepancy"] < 1e-9).all()


def test_oracle_with_fixed_partition(tmp_path):
    partition = tmp_path / "cells.json"
    partition.write_text("[[0, 1], [2, 3]]")
    out = str(tmp_path / "oracle.csv")
    assert main(["oracle", "--omega", "4", "--samples", "3", "--partition", str(partition), "--out", out]) == 0
    assert (read_csv_rows(out)["n_cells"] == 2).all()


def test_tolerance_overrides_file(inputs, tmp_path, capsys):
    overrides = tmp_path / "tol.json"
    overrides.write_text('{"t_grid_points": 5}')
    code = main(["check", "--rho", inputs["rho"], "--sigma", inputs["sigma"], "--algebra", inputs["algebra"],
                 "--tol-overrides", str(overrides)])
    assert code == 0
    assert _stdout_json(capsys)["gap"] == pytest.approx(0.130812, abs=1e-6)


class TestStagedOutput:
    """Test promotion and cleanup of staging files."""

    def test_success_promotes(self, tmp_path):
        out = str(tmp_path / "out.txt")
        with staged_output(out) as handle:
            handle.write("done\n")
        with open(out) as handle:
            assert handle.read() == "done\n"
        assert not os.path.exists(staging_path(out))

    def test_violation_retains_staging_file(self, tmp_path):
        out = str(tmp_path / "out.txt")
        with pytest.raises(TheoremViolation):
            with staged_output(out) as handle:
                handle.write("partial\n")
                raise TheoremViolation("bound violated")
        assert not os.path.exists(out)
        assert os.path.exists(staging_path(out))

    def test_other_failure_discards_staging_file(self, tmp_path):
        out = str(tmp_path / "out.txt")
        with pytest.raises(RuntimeError):
            with staged_output(out) as handle:
                handle.write("partial\n")
                raise RuntimeError("boom")
        assert not os.path.exists(out)
        assert not os.path.exists(staging_path(out))
