"""
The DPI gap S(rho||sigma) - S(rho_N||sigma_N) and its stability lower bounds.

Bound ids and right-hand sides (c4 = (pi/4)^4, c8 = (pi/8)^4, D = ||Delta_{sigma,rho}||):

    hs_root                     c4 D^-2 ||sigma_N^1/2 rho_N^-1/2 rho^1/2 - sigma^1/2||_2^4
    petz_trace                  c8 D^-2 ||R_rho(sigma_N) - sigma||_1^4
    petz_trace_uniform          c8 ||rho^-1||^-2 ||R_rho(sigma_N) - sigma||_1^4
    hs_root_swapped             c4 D^-2 ||rho_N||^-2 ||sigma_N^-1||^-2 ||rho_N^1/2 sigma_N^-1/2 sigma^1/2 - rho^1/2||_2^4
    petz_trace_swapped          c8 D^-2 ||rho_N||^-2 ||sigma_N^-1||^-2 ||R_sigma(rho_N) - rho||_1^4
    petz_trace_swapped_uniform  c8 ||rho^-1||^-2 ||sigma_N^-1||^-2 ||R_sigma(rho_N) - rho||_1^4
    fidelity                    c4 D^-2 (1 - sqrt F(sigma, R_rho(sigma_N)))^4
"""

import math
from dataclasses import dataclass, field
from typing import Dict, NamedTuple, Optional, Tuple

from algebra import Subalgebra
from config import get_tolerances
from errors import NotNormalized, SupportViolation
from linalg_core import as_matrix, dagger, hs_norm, trace_norm
from recovery import PetzResiduals, RecoveryPair, petz_recovery, petz_residuals
from states_entropy import StateLike, fidelity, is_infinite, relative_entropy

C4 = (math.pi / 4) ** 4
C8 = (math.pi / 8) ** 4

BOUND_IDS = (
    "hs_root",
    "petz_trace",
    "petz_trace_uniform",
    "hs_root_swapped",
    "petz_trace_swapped",
    "petz_trace_swapped_uniform",
    "fidelity",
)


def dpi_gap(rho: StateLike, sigma: StateLike, alg: Subalgebra,
            pair: Optional[RecoveryPair] = None) -> float:
    """S(rho||sigma) - S(E_tau rho || E_tau sigma) in nats; rho must be faithful."""
    pair = pair or RecoveryPair.build(rho, sigma, alg)
    full = relative_entropy(pair.ctx.rho, pair.sigma)
    coarse = relative_entropy(pair.ctx.rho_N, pair.sigma_N)
    if is_infinite(full) or is_infinite(coarse):
        raise SupportViolation(f"Relative entropy is infinite: {full if is_infinite(full) else coarse!r}")
    return full - coarse


def symmetric_gap(rho: StateLike, sigma: StateLike, alg: Subalgebra) -> float:
    return dpi_gap(rho, sigma, alg) + dpi_gap(sigma, rho, alg)


class BoundEntry(NamedTuple):
    value: float
    slack: float
    prefactor: float
    residual: float


@dataclass(frozen=True)
class BoundReport:
    """The gap, every bound, and every quantity the bounds were computed from."""
    gap: float
    bounds: Dict[str, BoundEntry]
    residuals: PetzResiduals
    quantities: Dict[str, float] = field(default_factory=dict)

    def slack(self, bound_id: str) -> float:
        return self.bounds[bound_id].slack

    @property
    def min_slack(self) -> float:
        return min(entry.slack for entry in self.bounds.values())

    def violations(self, tol: Optional[float] = None) -> Dict[str, float]:
        tol = get_tolerances().slack_tol if tol is None else tol
        return {k: e.slack for k, e in self.bounds.items() if e.slack < -tol}

    def as_row(self) -> Dict[str, float]:
        row: Dict[str, float] = {"gap": self.gap}
        for bound_id in BOUND_IDS:
            entry = self.bounds[bound_id]
            row[f"{bound_id}_bound"] = entry.value
            row[f"{bound_id}_slack"] = entry.slack
        row.update(self.residuals._asdict())
        row.update(self.quantities)
        return row


def evaluate_bounds(rho: StateLike, sigma: StateLike, alg: Subalgebra,
                    pair: Optional[RecoveryPair] = None) -> BoundReport:
    """All seven bounds from one evaluation of the residuals and norms."""
    pair = pair or RecoveryPair.build(rho, sigma, alg)
    ctx = pair.ctx
    gap = dpi_gap(ctx.rho, pair.sigma, alg, pair)
    res = petz_residuals(ctx, pair.sigma, pair)

    delta_norm = pair.delta.norm()
    rho_inv_norm = 1.0 / ctx.rho.min_eigenvalue
    rho_N_norm = ctx.rho_N.max_eigenvalue
    sigma_N_inv_norm = 1.0 / pair.sigma_N.min_eigenvalue
    recovered = petz_recovery(ctx, pair.sigma_N)
    F = min(fidelity(pair.sigma, recovered), 1.0)
    fidelity_defect = 1.0 - math.sqrt(F)

    swap = rho_N_norm ** -2 * sigma_N_inv_norm ** -2
    prefactors = {
        "hs_root": (C4 * delta_norm ** -2, res.eqcase_hs_residual),
        "petz_trace": (C8 * delta_norm ** -2, res.petz_trace_residual),
        "petz_trace_uniform": (C8 * rho_inv_norm ** -2, res.petz_trace_residual),
        "hs_root_swapped": (C4 * delta_norm ** -2 * swap, res.eqcase_symm_hs_residual),
        "petz_trace_swapped": (C8 * delta_norm ** -2 * swap, res.symm_trace_residual),
        "petz_trace_swapped_uniform": (C8 * rho_inv_norm ** -2 * sigma_N_inv_norm ** -2,
                                       res.symm_trace_residual),
        "fidelity": (C4 * delta_norm ** -2, fidelity_defect),
    }
    bounds = {}
    for bound_id in BOUND_IDS:
        prefactor, residual = prefactors[bound_id]
        value = prefactor * residual ** 4
        bounds[bound_id] = BoundEntry(value, gap - value, prefactor, residual)

    quantities = {
        "delta_norm": delta_norm,
        "rho_inv_norm": rho_inv_norm,
        "rho_N_norm": rho_N_norm,
        "sigma_N_inv_norm": sigma_N_inv_norm,
        "fidelity_recovered": F,
    }
    return BoundReport(gap, bounds, res, quantities)


def hs_to_trace_check(X, Y) -> Tuple[float, float]:
    """
    (||X*X - Y*Y||_1, 2 ||X - Y||_2) for HS-normalized X, Y; the first never
    exceeds the second.
    """
    X, Y = as_matrix(X), as_matrix(Y)
    tol = get_tolerances().normalization_tol
    for name, M in (("X", X), ("Y", Y)):
        norm_sq = hs_norm(M) ** 2
        if abs(norm_sq - 1.0) > tol:
            raise NotNormalized(f"Tr[{name}*{name}] = {norm_sq!r}, expected 1")
    lhs = trace_norm(dagger(X) @ X - dagger(Y) @ Y)
    rhs = 2.0 * hs_norm(X - Y)
    return lhs, rhs


class EqualityDiagnostics(NamedTuple):
    gap: float
    reverse_gap: float
    residuals: PetzResiduals
    residual_limits: Dict[str, float]
    is_equality_case: bool
    residuals_consistent: bool
    symmetric_agreement: bool


# residual field -> the bound whose prefactor turns a gap below tol into a residual ceiling
_RESIDUAL_BOUNDS = {
    "petz_trace_residual": "petz_trace",
    "symm_trace_residual": "petz_trace_swapped",
    "eqcase_hs_residual": "hs_root",
    "eqcase_symm_hs_residual": "hs_root_swapped",
}


def equality_diagnostics(rho: StateLike, sigma: StateLike, alg: Subalgebra,
                         tol: Optional[float] = None,
                         report: Optional[BoundReport] = None) -> EqualityDiagnostics:
    """
    Flags the pair as an equality case when gap < tol. Each residual is then
    held to (tol / prefactor)^(1/4), the ceiling the matching bound implies;
    this fourth-root scaling is a calibration heuristic, not a sharp limit.
    The reverse gap (roles of rho and sigma swapped) must agree on the flag.
    """
    tol = get_tolerances().equality_tol if tol is None else tol
    report = report or evaluate_bounds(rho, sigma, alg)
    reverse = dpi_gap(sigma, rho, alg)

    limits = {}
    consistent = True
    is_equality = report.gap < tol
    for name, bound_id in _RESIDUAL_BOUNDS.items():
        prefactor = report.bounds[bound_id].prefactor
        limits[name] = (tol / prefactor) ** 0.25
        if is_equality and getattr(report.residuals, name) >= limits[name]:
            consistent = False
    return EqualityDiagnostics(
        report.gap, reverse, report.residuals, limits, is_equality, consistent,
        (reverse < tol) == is_equality,
    )


def pinsker2_ratio(rho: StateLike, sigma: StateLike, alg: Subalgebra,
                   report: Optional[BoundReport] = None) -> float:
    """
    gap / (1/2 ||rho - R_sigma(rho_N)||_1^2): a quadratic Pinsker-type ratio
    with no proven lower bound; NaN when the recovery is exact to petz_residual_tol.
    """
    report = report or evaluate_bounds(rho, sigma, alg)
    residual = report.residuals.symm_trace_residual
    if residual <= get_tolerances().petz_residual_tol:
        return math.nan
    return report.gap / (0.5 * residual ** 2)
