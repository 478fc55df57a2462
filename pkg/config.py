"""
Runtime configuration: the tolerance record every numerical check reads,
plus logging setup shared by the library and the CLI.
"""

import logging
from dataclasses import dataclass, fields, replace
from typing import Any, Dict, Optional


@dataclass(frozen=True)
class Tolerances:
    """
    Every scalar tolerance and numerical knob in one place.

    Relative tolerances are scaled by the operator norm (or largest eigenvalue)
    of the matrix they are applied to; absolute ones are used as-is.
    """
    # linalg_core
    hermiticity_rel: float = 1e-12
    eig_tol: float = 1e-10
    pinv_rel: float = 1e-12

    # states
    state_tol: float = 1e-12
    faithful_threshold: float = 1e-10
    support_tol: float = 1e-12

    # algebras
    span_tol: float = 1e-10
    grouping_rel: float = 1e-8
    structure_tol: float = 1e-8
    max_random_attempts: int = 8

    # recovery / stability
    renormalize_tol: float = 1e-8
    in_algebra_tol: float = 1e-9
    normalization_tol: float = 1e-10
    equality_tol: float = 1e-9
    gap_tol: float = 1e-9
    slack_tol: float = 1e-8
    identity_tol: float = 1e-9

    # fixed-point structure
    fixed_point_rel: float = 1e-9
    cesaro_steps: int = 1024
    cesaro_tol: float = 1e-6
    weight_floor: float = 1e-12
    petz_residual_tol: float = 1e-7

    # GNS projection
    realness_tol: float = 1e-9
    gram_condition_warn: float = 1e12

    # classical oracle
    chain_tol: float = 1e-12
    oracle_tol: float = 1e-9

    # quadrature and t-grid
    quadrature_panels: int = 64
    quadrature_order: int = 16
    t_grid_min: float = 1e-3
    t_grid_max: float = 1e3
    t_grid_points: int = 25

    # input limits
    max_dim: int = 64


DEFAULT_TOLERANCES = Tolerances()

# Active record; swapped wholesale, never mutated in place
_ACTIVE_TOLERANCES = DEFAULT_TOLERANCES


def get_tolerances() -> Tolerances:
    """Return the active tolerance record."""
    return _ACTIVE_TOLERANCES


def tolerance_field_types() -> Dict[str, type]:
    return {f.name: type(getattr(DEFAULT_TOLERANCES, f.name)) for f in fields(Tolerances)}


def set_tolerances(overrides: Optional[Dict[str, Any]] = None) -> Tolerances:
    """
    Replace the active record with the defaults updated by `overrides`.
    Keys must already have been validated (see data_validation).
    """
    global _ACTIVE_TOLERANCES
    _ACTIVE_TOLERANCES = replace(DEFAULT_TOLERANCES, **(overrides or {}))
    if overrides:
        logging.info(f"Tolerance overrides applied: {sorted(overrides)}")
    return _ACTIVE_TOLERANCES


def apply_tolerance_overrides(path: str) -> Tolerances:
    """
    Load a JSON object of tolerance overrides (the --tol-overrides file)
    and make it the active record.
    """
    from data_validation import load_json_file, validate_tolerance_overrides

    overrides = validate_tolerance_overrides(load_json_file(path))
    return set_tolerances(overrides)


def reset_tolerances() -> None:
    """Restore the default record."""
    global _ACTIVE_TOLERANCES
    _ACTIVE_TOLERANCES = DEFAULT_TOLERANCES


# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(levelname)s - %(message)s'
)

# Audit logger
audit_logger = logging.getLogger('audit')
