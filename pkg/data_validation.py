import json
import logging
import math
from typing import Any, Dict, Optional

import numpy as np

from config import DEFAULT_TOLERANCES, get_tolerances, tolerance_field_types
from errors import DimensionMismatch, ParseError, ValidationError
from states_entropy import DensityMatrix

ALGEBRA_KINDS = ("generators", "tensor_factor", "diagonal", "full", "random_generated")


def load_json_file(path: str) -> Any:
    """
    Read one JSON document from disk.
    SAFETY: Unreadable files and malformed JSON both surface as ParseError.
    """
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return json.load(handle)
    except json.JSONDecodeError as e:
        raise ParseError(f"Invalid JSON in {path}: line {e.lineno} column {e.colno}: {e.msg}")
    except OSError as e:
        raise ParseError(f"Cannot read {path}: {e.strerror}")


def safe_int_conversion(value: Any, name: str, minimum: int = 0,
                        maximum: Optional[int] = None) -> int:
    """
    SAFETY: Convert to int and range-check. Booleans and non-integral floats are rejected.
    """
    if isinstance(value, bool):
        raise ValidationError(f"{name} must be an integer, got {value!r}")
    try:
        result = int(value)
    except (ValueError, TypeError):
        raise ValidationError(f"{name} must be an integer, got {value!r}")
    if isinstance(value, float) and value != result:
        raise ValidationError(f"{name} must be an integer, got {value!r}")
    if result < minimum or (maximum is not None and result > maximum):
        raise ValidationError(f"{name}={result} outside [{minimum}, {maximum if maximum is not None else 'inf'}]")
    return result


def safe_float_conversion(value: Any, name: str) -> float:
    """
    SAFETY: Convert to a finite float.
    """
    if isinstance(value, bool):
        raise ValidationError(f"{name} must be a number, got {value!r}")
    try:
        result = float(value)
    except (ValueError, TypeError):
        raise ValidationError(f"{name} must be a number, got {value!r}")
    if not math.isfinite(result):
        raise ValidationError(f"{name} must be finite, got {value!r}")
    return result


def _real_block(rows: Any, dim: int, name: str) -> np.ndarray:
    if not isinstance(rows, list) or len(rows) != dim:
        raise DimensionMismatch(f"{name} must be a list of {dim} rows")
    out = np.empty((dim, dim), dtype=float)
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != dim:
            raise DimensionMismatch(f"{name} row {i} must have {dim} entries")
        for j, value in enumerate(row):
            out[i, j] = safe_float_conversion(value, f"{name}[{i}][{j}]")
    return out


def parse_matrix(obj: Any, max_dim: Optional[int] = None) -> np.ndarray:
    """
    Matrix JSON {"dim": n, "re": [[...]], "im": [[...]]}, row-major; "im"
    may be omitted for real matrices.
    """
    if not isinstance(obj, dict):
        raise ParseError(f"Matrix JSON must be an object, got {type(obj).__name__}")
    for field in ("dim", "re"):
        if field not in obj:
            raise ParseError(f"Missing required field: {field}")
    max_dim = get_tolerances().max_dim if max_dim is None else max_dim
    dim = safe_int_conversion(obj["dim"], "dim", minimum=1, maximum=max_dim)
    re = _real_block(obj["re"], dim, "re")
    im = _real_block(obj["im"], dim, "im") if obj.get("im") is not None else np.zeros_like(re)
    logging.debug(f"Parsed {dim}x{dim} matrix")
    return re + 1j * im


def parse_density(obj: Any, name: str = "state") -> DensityMatrix:
    """Matrix JSON followed by the full density-matrix validation pass."""
    M = parse_matrix(obj)
    try:
        return DensityMatrix.from_matrix(M)
    except ValidationError as e:
        raise type(e)(f"{name}: {e}")


def matrix_to_json(M: np.ndarray) -> Dict[str, Any]:
    M = np.asarray(M, dtype=complex)
    return {"dim": int(M.shape[0]), "re": np.real(M).tolist(), "im": np.imag(M).tolist()}


def validate_algebra_spec(obj: Any) -> Dict[str, Any]:
    """
    Check an algebra JSON object and return it with integer fields converted.
    Generator matrices are parsed here so every error names its field.
    """
    if not isinstance(obj, dict):
        raise ParseError(f"Algebra JSON must be an object, got {type(obj).__name__}")
    kind = obj.get("kind")
    if kind not in ALGEBRA_KINDS:
        raise ValidationError(f"Unknown algebra kind {kind!r}; expected one of {', '.join(ALGEBRA_KINDS)}")

    max_dim = get_tolerances().max_dim
    spec: Dict[str, Any] = {"kind": kind}
    if kind == "tensor_factor":
        spec["d1"] = safe_int_conversion(obj.get("d1"), "d1", minimum=1, maximum=max_dim)
        spec["d2"] = safe_int_conversion(obj.get("d2"), "d2", minimum=1, maximum=max_dim)
        if spec["d1"] * spec["d2"] > max_dim:
            raise ValidationError(f"d1*d2 = {spec['d1'] * spec['d2']} exceeds max_dim {max_dim}")
        spec["which"] = obj.get("which", "second")
        if spec["which"] not in ("first", "second"):
            raise ValidationError(f"which must be 'first' or 'second', got {spec['which']!r}")
        return spec

    spec["dim"] = safe_int_conversion(obj.get("dim"), "dim", minimum=1, maximum=max_dim)
    if kind == "generators":
        generators = obj.get("generators")
        if not isinstance(generators, list):
            raise ParseError("generators must be an array of matrices")
        parsed = [parse_matrix(g) for g in generators]
        for k, G in enumerate(parsed):
            if G.shape[0] != spec["dim"]:
                raise DimensionMismatch(f"generator {k} is {G.shape[0]}x{G.shape[0]}, algebra dim is {spec['dim']}")
        spec["generators"] = parsed
    return spec


def validate_tolerance_overrides(obj: Any) -> Dict[str, Any]:
    """
    SAFETY: Only known tolerance fields, with their declared types and
    strictly positive values, make it into the active record.
    """
    if not isinstance(obj, dict):
        raise ParseError("Tolerance overrides must be a JSON object")
    types = tolerance_field_types()
    unknown = sorted(set(obj) - set(types))
    if unknown:
        raise ValidationError(f"Unknown tolerance fields: {', '.join(unknown)}")

    overrides: Dict[str, Any] = {}
    for key, value in obj.items():
        if types[key] is int:
            overrides[key] = safe_int_conversion(value, key, minimum=1)
        else:
            number = safe_float_conversion(value, key)
            if number <= 0:
                raise ValidationError(f"{key} must be positive, got {number!r}")
            overrides[key] = number

    defaults = DEFAULT_TOLERANCES
    grid_min = overrides.get("t_grid_min", defaults.t_grid_min)
    grid_max = overrides.get("t_grid_max", defaults.t_grid_max)
    if grid_min >= grid_max:
        raise ValidationError(f"t_grid_min ({grid_min!r}) must be below t_grid_max ({grid_max!r})")
    return overrides
