"""
Seeded ensemble sweeps.

Instance i draws everything from the Philox stream keyed by
seed XOR splitmix64(i), so its numbers do not depend on which worker ran
it or in what order. Workers only compute; rows are gathered and returned
in instance order.
"""

import logging
import time
from dataclasses import dataclass, field
from functools import partial
from multiprocessing.pool import ThreadPool
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from algebra import Subalgebra
from algebra_specs import build_algebra
from audit import log_audit_event, sanitize_error_message
from classical_ssa import (classical_chain, classical_pinsker_gap, diagonal_oracle_check,
                           random_classical_model, random_tripartite, ssa_suite)
from config import get_tolerances
from errors import DimensionMismatch, DpiError, NumericalError, ValidationError
from recovery import RecoveryPair
from rng import instance_generator, instance_seed
from stability import BOUND_IDS, equality_diagnostics, evaluate_bounds, pinsker2_ratio
from states_entropy import random_density

RANK_POLICIES = {"full": 1, "oversampled": 2}


@dataclass(frozen=True)
class SweepConfig:
    dim: int
    algebra: Dict[str, Any]
    samples: int
    seed: int
    rank: str = "full"
    threads: int = 1
    output: Optional[str] = None

    def __post_init__(self):
        if self.samples < 1:
            raise ValidationError(f"samples must be at least 1, got {self.samples}")
        if self.dim < 1:
            raise ValidationError(f"dim must be at least 1, got {self.dim}")
        if self.rank not in RANK_POLICIES:
            raise ValidationError(f"rank must be one of {', '.join(RANK_POLICIES)}, got {self.rank!r}")
        if self.threads < 1:
            raise ValidationError(f"threads must be at least 1, got {self.threads}")


@dataclass(frozen=True)
class SsaConfig:
    dims: Tuple[int, int, int]
    samples: int
    seed: int
    threads: int = 1

    def __post_init__(self):
        if self.samples < 1 or len(self.dims) != 3 or min(self.dims) < 1:
            raise ValidationError(f"Invalid SSA sweep: dims {self.dims}, samples {self.samples}")


@dataclass(frozen=True)
class OracleConfig:
    omega_size: int
    samples: int
    seed: int
    threads: int = 1
    partition: Optional[Sequence[Sequence[int]]] = None

    def __post_init__(self):
        if self.samples < 1 or self.omega_size < 1:
            raise ValidationError(f"Invalid oracle sweep: |Omega| {self.omega_size}, samples {self.samples}")


@dataclass
class InstanceReport:
    index: int
    seed: int
    row: Dict[str, Any] = field(default_factory=dict)
    violations: List[str] = field(default_factory=list)
    elapsed_ms: float = 0.0
    error: Optional[str] = None

    @property
    def succeeded(self) -> bool:
        return self.error is None


@dataclass
class EnsembleResult:
    reports: List[InstanceReport]
    summary: Dict[str, Any]

    @property
    def rows(self) -> List[Dict[str, Any]]:
        return [r.row for r in self.reports if r.succeeded]

    @property
    def violation_count(self) -> int:
        return sum(len(r.violations) for r in self.reports)

    @property
    def failure_count(self) -> int:
        return sum(1 for r in self.reports if not r.succeeded)


def _timed(evaluate: Callable[[int], Tuple[Dict[str, Any], List[str]]],
           seed: int, index: int) -> InstanceReport:
    report = InstanceReport(index, instance_seed(seed, index))
    start = time.perf_counter()
    try:
        report.row, report.violations = evaluate(index)
    except DpiError as e:
        report.error = sanitize_error_message(e)
        logging.exception(f"Instance {index} failed")
    report.elapsed_ms = (time.perf_counter() - start) * 1000.0
    return report


def run_ensemble(event_type: str, samples: int, seed: int, threads: int,
                 evaluate: Callable[[int], Tuple[Dict[str, Any], List[str]]]) -> List[InstanceReport]:
    """
    Evaluate instances 0..samples-1 on a thread pool. Failures are counted,
    not raised, so one bad instance does not hide the rest; the caller
    decides what failures mean for the output.
    """
    worker = partial(_timed, evaluate, seed)
    if threads == 1:
        reports = [worker(i) for i in range(samples)]
    else:
        with ThreadPool(threads) as pool:
            reports = pool.map(worker, range(samples))

    failed = [r for r in reports if not r.succeeded]
    violations = sum(len(r.violations) for r in reports)
    errors = [f"instance={r.index}: {r.error}" for r in failed]
    errors += [f"instance={r.index}: {', '.join(r.violations)}" for r in reports if r.violations]
    log_audit_event(
        event_type=event_type,
        instances_processed=len(reports),
        instances_succeeded=len(reports) - len(failed),
        instances_failed=len(failed),
        violations=violations,
        error_summary='; '.join(errors[:5]) if errors else None  # First 5 errors only
    )
    total_ms = sum(r.elapsed_ms for r in reports)
    logging.info(f"{event_type}: {len(reports) - len(failed)} succeeded, {len(failed)} failed, "
                 f"{violations} violation(s), {total_ms:.1f} ms of instance time")
    return reports


def _base_summary(reports: List[InstanceReport]) -> Dict[str, Any]:
    return {
        "processed": len(reports),
        "succeeded": sum(1 for r in reports if r.succeeded),
        "failed": sum(1 for r in reports if not r.succeeded),
        "violations": sum(len(r.violations) for r in reports),
    }


# DPI stability sweep

def evaluate_instance(config: SweepConfig, index: int,
                      alg: Optional[Subalgebra] = None) -> Tuple[Dict[str, Any], List[str]]:
    """One random faithful pair: every bound, the equality diagnostics and the Pinsker-type ratio."""
    tol = get_tolerances()
    rng = instance_generator(config.seed, index)
    if alg is None:
        alg = build_algebra(config.algebra, rng)
    if alg.ambient_dim != config.dim:
        raise ValidationError(f"Algebra lives in M_{alg.ambient_dim}, sweep dimension is {config.dim}")
    oversample = RANK_POLICIES[config.rank]
    rho = random_density(config.dim, rng=rng, oversample=oversample)
    sigma = random_density(config.dim, rng=rng, oversample=oversample)

    pair = RecoveryPair.build(rho, sigma, alg)
    report = evaluate_bounds(rho, sigma, alg, pair)
    eq = equality_diagnostics(rho, sigma, alg, report=report)

    row: Dict[str, Any] = {"instance": index, "seed": instance_seed(config.seed, index)}
    row.update(report.as_row())
    row.update({
        "reverse_gap": eq.reverse_gap,
        "is_equality_case": eq.is_equality_case,
        "residuals_consistent": eq.residuals_consistent,
        "symmetric_agreement": eq.symmetric_agreement,
        "pinsker2_ratio": pinsker2_ratio(rho, sigma, alg, report),
    })

    violations = [f"{bound_id} slack {slack:.3e}" for bound_id, slack in report.violations().items()]
    if report.gap < -tol.gap_tol:
        violations.append(f"negative gap {report.gap:.3e}")
    if not eq.residuals_consistent:
        violations.append("equality flag without vanishing residuals")
    return row, violations


def run_sweep(config: SweepConfig) -> EnsembleResult:
    shared = None
    if not isinstance(config.algebra, dict) or config.algebra.get("kind") != "random_generated":
        shared = build_algebra(config.algebra)
        if shared.ambient_dim != config.dim:
            raise DimensionMismatch(f"Algebra lives in M_{shared.ambient_dim}, sweep dimension is {config.dim}")
    reports = run_ensemble("SWEEP", config.samples, config.seed, config.threads,
                           partial(evaluate_instance, config, alg=shared))
    summary = _base_summary(reports)
    rows = [r.row for r in reports if r.succeeded]
    summary["min_slack"] = {b: min((row[f"{b}_slack"] for row in rows), default=None) for b in BOUND_IDS}
    summary["min_gap"] = min((row["gap"] for row in rows), default=None)
    return EnsembleResult(reports, summary)


# Strong subadditivity sweep

def evaluate_ssa_instance(config: SsaConfig, index: int) -> Tuple[Dict[str, Any], List[str]]:
    tol = get_tolerances()
    rng = instance_generator(config.seed, index)
    record = ssa_suite(random_tripartite(config.dims, rng))
    row = {"instance": index, "seed": instance_seed(config.seed, index)}
    row.update(record._asdict())
    row["identity_residual"] = record.identity_residual
    row["improved_slack"] = record.improved_slack

    violations = []
    if record.ssa_gap < -tol.gap_tol:
        violations.append(f"negative SSA gap {record.ssa_gap:.3e}")
    if record.identity_residual > tol.identity_tol:
        violations.append(f"SSA rewriting residual {record.identity_residual:.3e}")
    if record.improved_slack < -tol.slack_tol:
        violations.append(f"improved SSA slack {record.improved_slack:.3e}")
    return row, violations


def run_ssa(config: SsaConfig) -> EnsembleResult:
    reports = run_ensemble("SSA", config.samples, config.seed, config.threads,
                           partial(evaluate_ssa_instance, config))
    rows = [r.row for r in reports if r.succeeded]
    summary = _base_summary(reports)
    summary["min_ssa_gap"] = min((row["ssa_gap"] for row in rows), default=None)
    summary["max_identity_residual"] = max((row["identity_residual"] for row in rows), default=None)
    summary["min_improved_slack"] = min((row["improved_slack"] for row in rows), default=None)
    return EnsembleResult(reports, summary)


# Classical oracle sweep

def evaluate_oracle_instance(config: OracleConfig, index: int) -> Tuple[Dict[str, Any], List[str]]:
    tol = get_tolerances()
    rng = instance_generator(config.seed, index)
    model = random_classical_model(config.omega_size, rng, config.partition)
    chain = classical_chain(model)
    pinsker = classical_pinsker_gap(model)
    discrepancy = diagonal_oracle_check(model)
    chain_residual = abs(chain.conditional_term - chain.conditional_direct)

    row = {
        "instance": index,
        "seed": instance_seed(config.seed, index),
        "omega_size": model.omega_size,
        "n_cells": model.n_cells,
        "gap": pinsker.gap,
        "pinsker_rhs": pinsker.pinsker_rhs,
        "recovery_l1": pinsker.recovery_l1,
        "chain_residual": chain_residual,
        "max_discrepancy": discrepancy,
    }
    violations = []
    if discrepancy > tol.oracle_tol:
        violations.append(f"diagonal oracle discrepancy {discrepancy:.3e}")
    if chain_residual > tol.chain_tol:
        violations.append(f"chain identity residual {chain_residual:.3e}")
    if pinsker.gap < pinsker.pinsker_rhs - tol.chain_tol:
        violations.append(f"classical Pinsker margin {pinsker.gap - pinsker.pinsker_rhs:.3e}")
    return row, violations


def run_oracle(config: OracleConfig) -> EnsembleResult:
    reports = run_ensemble("ORACLE", config.samples, config.seed, config.threads,
                           partial(evaluate_oracle_instance, config))
    rows = [r.row for r in reports if r.succeeded]
    summary = _base_summary(reports)
    summary["max_discrepancy"] = max((row["max_discrepancy"] for row in rows), default=None)
    summary["max_chain_residual"] = max((row["chain_residual"] for row in rows), default=None)
    return EnsembleResult(reports, summary)


def raise_for_failures(result: EnsembleResult, label: str) -> None:
    """Instance failures abort the output like a violation does, with exit code 3."""
    if result.failure_count:
        raise NumericalError(f"{label}: {result.failure_count} instance(s) failed")
