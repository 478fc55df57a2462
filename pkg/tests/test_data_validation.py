"""
Unit tests for matrix JSON parsing and input validation.
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

import numpy as np
import pytest

from config import apply_tolerance_overrides, get_tolerances, reset_tolerances
from data_validation import (load_json_file, matrix_to_json, parse_density, parse_matrix,
                             safe_float_conversion, safe_int_conversion, validate_algebra_spec,
                             validate_tolerance_overrides)
from errors import DimensionMismatch, NotHermitian, NotNormalized, ParseError, ValidationError
from sample_test_data import (SAMPLE_GENERATORS_ALGEBRA_JSON, SAMPLE_MALFORMED_JSON,
                              SAMPLE_NOT_HERMITIAN_JSON, SAMPLE_RHO_JSON, SAMPLE_SIGMA_JSON,
                              SAMPLE_TENSOR_ALGEBRA_JSON, SAMPLE_UNNORMALIZED_JSON,
                              SAMPLE_WRONG_SHAPE_JSON)


class TestSafeConversions:
    """Test the SAFETY conversions."""

    def test_safe_int(self):
        assert safe_int_conversion("3", "dim") == 3
        assert safe_int_conversion(4.0, "dim") == 4
        with pytest.raises(ValidationError):
            safe_int_conversion(2.5, "dim")
        with pytest.raises(ValidationError):
            safe_int_conversion(True, "dim")
        with pytest.raises(ValidationError):
            safe_int_conversion("abc", "dim")
        with pytest.raises(ValidationError):
            safe_int_conversion(0, "dim", minimum=1)
        with pytest.raises(ValidationError):
            safe_int_conversion(100, "dim", minimum=1, maximum=64)

    def test_safe_float(self):
        assert safe_float_conversion("0.5", "x") == 0.5
        with pytest.raises(ValidationError):
            safe_float_conversion(float("nan"), "x")
        with pytest.raises(ValidationError):
            safe_float_conversion(None, "x")


class TestMatrixParsing:
    """Test matrix JSON parsing."""

    def test_real_matrix_without_imaginary_part(self):
        M = parse_matrix(json.loads(SAMPLE_RHO_JSON))
        assert M.shape == (2, 2)
        assert np.allclose(M, [[0.5, 0.25], [0.25, 0.5]])

    def test_complex_matrix(self):
        M = parse_matrix({"dim": 2, "re": [[0.5, 0.0], [0.0, 0.5]], "im": [[0.0, 0.1], [-0.1, 0.0]]})
        assert M[0, 1] == pytest.approx(0.1j)

    def test_missing_field(self):
        with pytest.raises(ParseError):
            parse_matrix({"dim": 2})
        with pytest.raises(ParseError):
            parse_matrix([[1.0]])

    def test_wrong_shape(self):
        with pytest.raises(DimensionMismatch):
            parse_matrix(json.loads(SAMPLE_WRONG_SHAPE_JSON))

    def test_dimension_limit(self):
        with pytest.raises(ValidationError):
            parse_matrix({"dim": 3, "re": np.eye(3).tolist()}, max_dim=2)

    def test_non_numeric_entry(self):
        with pytest.raises(ValidationError):
            parse_matrix({"dim": 1, "re": [["x"]]})

    def test_to_json_shape(self):
        body = matrix_to_json(np.array([[1.0, 2.0j], [-2.0j, 1.0]]))
        assert body["dim"] == 2
        assert body["im"][0][1] == 2.0
        assert np.allclose(parse_matrix(body), [[1.0, 2.0j], [-2.0j, 1.0]])


class TestDensityParsing:
    """Test the density-matrix validation pass on parsed JSON."""

    def test_valid_states(self):
        assert parse_density(json.loads(SAMPLE_RHO_JSON)).faithful
        assert parse_density(json.loads(SAMPLE_SIGMA_JSON)).dim == 2

    def test_unnormalized(self):
        with pytest.raises(NotNormalized) as info:
            parse_density(json.loads(SAMPLE_UNNORMALIZED_JSON), "sigma")
        assert str(info.value).startswith("sigma:")

    def test_not_hermitian(self):
        with pytest.raises(NotHermitian):
            parse_density(json.loads(SAMPLE_NOT_HERMITIAN_JSON))


class TestAlgebraSpecs:
    """Test algebra JSON validation."""

    def test_tensor_factor(self):
        spec = validate_algebra_spec(json.loads(SAMPLE_TENSOR_ALGEBRA_JSON))
        assert spec == {"kind": "tensor_factor", "d1": 2, "d2": 2, "which": "second"}

    def test_generators(self):
        spec = validate_algebra_spec(json.loads(SAMPLE_GENERATORS_ALGEBRA_JSON))
        assert spec["dim"] == 2
        assert np.allclose(spec["generators"][0], np.diag([1.0, -1.0]))

    def test_unknown_kind(self):
        with pytest.raises(ValidationError):
            validate_algebra_spec({"kind": "hexagonal", "dim": 2})

    def test_bad_which(self):
        with pytest.raises(ValidationError):
            validate_algebra_spec({"kind": "tensor_factor", "d1": 2, "d2": 2, "which": "third"})

    def test_generator_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            validate_algebra_spec({"kind": "generators", "dim": 3,
                                   "generators": [{"dim": 2, "re": [[1.0, 0.0], [0.0, -1.0]]}]})

    def test_generators_must_be_a_list(self):
        with pytest.raises(ParseError):
            validate_algebra_spec({"kind": "generators", "dim": 2, "generators": "Z"})


class TestJsonFiles:
    """Test file loading and tolerance overrides."""

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(SAMPLE_MALFORMED_JSON)
        with pytest.raises(ParseError):
            load_json_file(str(path))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ParseError):
            load_json_file(str(tmp_path / "absent.json"))

    def test_tolerance_overrides_validation(self):
        assert validate_tolerance_overrides({"gap_tol": 1e-6, "cesaro_steps": 64}) == \
            {"gap_tol": 1e-6, "cesaro_steps": 64}
        with pytest.raises(ValidationError):
            validate_tolerance_overrides({"no_such_field": 1.0})
        with pytest.raises(ValidationError):
            validate_tolerance_overrides({"gap_tol": -1.0})
        with pytest.raises(ParseError):
            validate_tolerance_overrides([1.0])

    def test_tolerance_overrides_reject_inverted_t_grid(self):
        with pytest.raises(ValidationError):
            validate_tolerance_overrides({"t_grid_min": 10.0, "t_grid_max": 1.0})
        with pytest.raises(ValidationError):
            validate_tolerance_overrides({"t_grid_min": 5.0, "t_grid_max": 5.0})
        # a single bound is compared against the default for the other
        with pytest.raises(ValidationError):
            validate_tolerance_overrides({"t_grid_min": 1e4})
        with pytest.raises(ValidationError):
            validate_tolerance_overrides({"t_grid_max": 0.0})
        assert validate_tolerance_overrides({"t_grid_min": 0.01, "t_grid_max": 100.0}) == \
            {"t_grid_min": 0.01, "t_grid_max": 100.0}

    def test_apply_tolerance_overrides(self, tmp_path):
        path = tmp_path / "tol.json"
        path.write_text('{"t_grid_points": 5, "gap_tol": 1e-7}')
        try:
            active = apply_tolerance_overrides(str(path))
            assert active.t_grid_points == 5
            assert get_tolerances().gap_tol == 1e-7
        finally:
            reset_tolerances()
        assert get_tolerances().t_grid_points == 25
