import logging
from typing import Any, Dict, Optional

import numpy as np

from algebra import (Subalgebra, close_generators, diagonal_algebra, full_algebra,
                     random_generated_algebra, tensor_factor_algebra)
from data_validation import validate_algebra_spec
from errors import ParseError, ValidationError

SHORTHAND_KINDS = ("diagonal", "tensor_factor", "random_generated")


def detect_algebra_kind(obj: Dict[str, Any]) -> str:
    """Algebra kind from a JSON object; an object with generators and no kind counts as 'generators'."""
    if "kind" in obj:
        return obj["kind"]
    if "generators" in obj:
        return "generators"
    if "d1" in obj and "d2" in obj:
        return "tensor_factor"
    raise ValidationError("Algebra JSON has no 'kind' field")


def shorthand_spec(kind: str, dim: int) -> Dict[str, Any]:
    """
    The sweep's --algebra shorthand. tensor_factor splits dim as 2 x dim/2
    and keeps the second factor.
    """
    if kind not in SHORTHAND_KINDS:
        raise ValidationError(f"Unknown algebra shorthand {kind!r}; expected one of {', '.join(SHORTHAND_KINDS)}")
    if kind == "tensor_factor":
        if dim % 2:
            raise ValidationError(f"tensor_factor shorthand needs an even dimension, got {dim}")
        return {"kind": kind, "d1": 2, "d2": dim // 2, "which": "second"}
    return {"kind": kind, "dim": dim}


def build_algebra(obj: Dict[str, Any], rng: Optional[np.random.Generator] = None) -> Subalgebra:
    """Validated algebra JSON -> Subalgebra."""
    if not isinstance(obj, dict):
        raise ParseError(f"Algebra JSON must be an object, got {type(obj).__name__}")
    obj = dict(obj)
    obj["kind"] = detect_algebra_kind(obj)
    spec = validate_algebra_spec(obj)
    kind = spec["kind"]

    if kind == "tensor_factor":
        alg = tensor_factor_algebra(spec["d1"], spec["d2"], spec["which"])
    elif kind == "diagonal":
        alg = diagonal_algebra(spec["dim"])
    elif kind == "full":
        alg = full_algebra(spec["dim"])
    elif kind == "generators":
        alg = close_generators(spec["dim"], spec["generators"])
    else:
        if rng is None:
            raise ValidationError("random_generated algebras need a seeded generator")
        alg = random_generated_algebra(spec["dim"], rng)

    logging.debug(f"Built {kind} algebra: dim {alg.dim} in M_{alg.ambient_dim}")
    return alg
