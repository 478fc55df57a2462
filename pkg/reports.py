"""
Report emission: JSON documents for single-instance commands and the
versioned CSV written by the ensemble commands.

CSV layout:

    # dpi-stability <table> v1 columns=<comma list>
    <header row>
    <one row per instance, instance order>
    # summary {...}

Floats are written with 17 significant digits so reruns with the same seed
reproduce the file byte for byte.
"""

import json
import math
from typing import Any, Dict, List, Sequence, TextIO

import numpy as np
import pandas as pd

from data_validation import matrix_to_json
from states_entropy import DensityMatrix, InfiniteEntropy
from stability import BOUND_IDS

SCHEMA_VERSION = 1
FLOAT_FORMAT = "%.17g"

SWEEP_COLUMNS: List[str] = (
    ["instance", "seed", "gap"]
    + [f"{b}_{part}" for b in BOUND_IDS for part in ("bound", "slack")]
    + ["petz_trace_residual", "symm_trace_residual", "eqcase_hs_residual", "eqcase_symm_hs_residual",
       "delta_norm", "rho_inv_norm", "rho_N_norm", "sigma_N_inv_norm", "fidelity_recovered",
       "reverse_gap", "is_equality_case", "residuals_consistent", "symmetric_agreement",
       "pinsker2_ratio"]
)

SSA_COLUMNS: List[str] = ["instance", "seed", "ssa_gap", "mono_form_gap", "identity_residual",
                          "improved_rhs", "improved_slack"]

ORACLE_COLUMNS: List[str] = ["instance", "seed", "omega_size", "n_cells", "gap", "pinsker_rhs",
                             "recovery_l1", "chain_residual", "max_discrepancy"]


def format_value(value: Any) -> str:
    """One scalar as it appears in CSV and JSON summaries."""
    if isinstance(value, InfiniteEntropy):
        return "inf"
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return FLOAT_FORMAT % value


def to_jsonable(obj: Any) -> Any:
    """Matrices become matrix JSON, the +inf sentinel becomes "inf", NaN becomes null."""
    if isinstance(obj, DensityMatrix):
        return matrix_to_json(obj.matrix)
    if isinstance(obj, np.ndarray):
        if obj.ndim == 2 and obj.shape[0] == obj.shape[1]:
            return matrix_to_json(obj)
        return [to_jsonable(x) for x in obj.tolist()]
    if isinstance(obj, InfiniteEntropy):
        return "inf"
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(x) for x in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        if math.isnan(value):
            return None
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def dumps(document: Dict[str, Any]) -> str:
    return json.dumps(to_jsonable(document), indent=2, sort_keys=True)


def write_csv(handle: TextIO, table: str, columns: Sequence[str],
              rows: Sequence[Dict[str, Any]], summary: Dict[str, Any]) -> None:
    """Versioned header comment, the rows in the given order, summary footer."""
    handle.write(f"# dpi-stability {table} v{SCHEMA_VERSION} columns={','.join(columns)}\n")
    frame = pd.DataFrame([{c: format_value(row[c]) for c in columns} for row in rows], columns=list(columns))
    frame.to_csv(handle, index=False, lineterminator="\n")
    handle.write(f"# summary {json.dumps(to_jsonable(summary), sort_keys=True)}\n")


def read_csv_rows(path: str) -> pd.DataFrame:
    """The rows of a file written by `write_csv`, header and footer comments skipped."""
    return pd.read_csv(path, comment="#")
