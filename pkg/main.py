import argparse
import logging
import sys
from typing import Any, Dict, List, Optional, Sequence

from algebra_specs import SHORTHAND_KINDS, build_algebra, shorthand_spec
from audit import log_audit_event, sanitize_error_message
from config import apply_tolerance_overrides, audit_logger, get_tolerances, reset_tolerances
from data_validation import load_json_file, parse_density, safe_int_conversion
from errors import DpiError, NumericalError, TheoremViolation, ValidationError, exit_code_for
from gns_conditional import takesaki_report
from petz_structure import build_equality_state, build_structure
from recovery import RecoveryContext, RecoveryPair, w_diagnostics
from reports import (ORACLE_COLUMNS, SSA_COLUMNS, SWEEP_COLUMNS, dumps, to_jsonable,
                     write_csv)
from rng import make_generator
from stability import equality_diagnostics, evaluate_bounds, pinsker2_ratio
from staging import staged_output
from states_entropy import random_density
from sweep import (OracleConfig, SsaConfig, SweepConfig, raise_for_failures, run_oracle,
                   run_ssa, run_sweep)


def _emit_text(text: str, out: Optional[str], violation: Optional[TheoremViolation] = None) -> None:
    """Print to stdout, or write through a staging file when --out is given."""
    if not out:
        sys.stdout.write(text)
        if violation is not None:
            raise violation
        return
    with staged_output(out) as handle:
        handle.write(text)
        if violation is not None:
            raise violation


def _emit_csv(table: str, columns: List[str], result, out: Optional[str],
              violation: Optional[TheoremViolation]) -> None:
    if not out:
        write_csv(sys.stdout, table, columns, result.rows, result.summary)
        if violation is not None:
            raise violation
        return
    with staged_output(out) as handle:
        write_csv(handle, table, columns, result.rows, result.summary)
        if violation is not None:
            raise violation


def _load_inputs(args, need_sigma: bool = True):
    rng = make_generator(args.seed)
    rho = parse_density(load_json_file(args.rho), "rho")
    sigma = parse_density(load_json_file(args.sigma), "sigma") if need_sigma else None
    alg = build_algebra(load_json_file(args.algebra), rng)
    return rho, sigma, alg, rng


def cmd_check(args) -> Dict[str, Any]:
    """Every bound, the equality diagnostics and the exact identities for one (rho, sigma, N)."""
    rho, sigma, alg, _ = _load_inputs(args)
    pair = RecoveryPair.build(rho, sigma, alg)
    report = evaluate_bounds(rho, sigma, alg, pair)
    eq = equality_diagnostics(rho, sigma, alg, report=report)
    identities = w_diagnostics(pair)

    document = {
        "gap": report.gap,
        "bounds": {k: e._asdict() for k, e in report.bounds.items()},
        "min_slack": report.min_slack,
        "residuals": report.residuals._asdict(),
        "quantities": report.quantities,
        "equality": {
            "reverse_gap": eq.reverse_gap,
            "is_equality_case": eq.is_equality_case,
            "residuals_consistent": eq.residuals_consistent,
            "symmetric_agreement": eq.symmetric_agreement,
            "residual_limits": eq.residual_limits,
        },
        "pinsker2_ratio": pinsker2_ratio(rho, sigma, alg, report),
        "identities": {
            "max_gap_residual": max(r.gap_residual for r in identities),
            "max_isometry_residual": max(r.isometry_residual for r in identities),
            "min_positivity_margin": min(r.positivity_margin for r in identities),
        },
        "violations": report.violations(),
    }
    violation = None
    if document["violations"]:
        violation = TheoremViolation(f"Bounds violated: {document['violations']}")
    elif not eq.residuals_consistent:
        violation = TheoremViolation("Equality flagged but the Petz residuals do not vanish")
    log_audit_event("CHECK", 1, 1, 0, violations=len(document["violations"]))
    _emit_text(dumps(document) + "\n", args.out, violation)
    return document


def cmd_structure(args) -> Dict[str, Any]:
    """Block profile of the fixed-point algebra and one sampled solution of the Petz equation."""
    rho, _, alg, rng = _load_inputs(args, need_sigma=False)
    fps = build_structure(RecoveryContext.build(rho, alg), rng)

    block_states = [random_density(d_right, rng=rng) for _, d_right in fps.profile]
    weights = rng.standard_exponential(fps.n_blocks)
    weights = weights / weights.sum()
    sigma = build_equality_state(fps, block_states, weights)
    sample: Dict[str, Any] = {"sigma": sigma, "weights": weights.tolist()}
    if sigma.faithful:
        sample_report = evaluate_bounds(rho, sigma, alg)
        sample["gap"] = sample_report.gap
        sample["petz_trace_residual"] = sample_report.residuals.petz_trace_residual

    document = {
        "fixed_point_dim": fps.C.dim,
        "blocks": [
            {"d_left": d_left, "d_right": d_right, "weight": float(w)}
            for (d_left, d_right), w in zip(fps.profile, fps.weights)
        ],
        "gammas": list(fps.gammas),
        "residuals": fps.residuals,
        "equality_sample": sample,
    }
    if fps.C.dim == 1:
        document["message"] = "equality forces sigma = rho"
    _emit_text(dumps(document) + "\n", args.out)
    return document


def cmd_takesaki(args) -> Dict[str, Any]:
    rho, _, alg, rng = _load_inputs(args, need_sigma=False)
    document = takesaki_report(rho, alg, rng)
    violation = None
    if not document["flags_consistent"]:
        violation = TheoremViolation("Realness, invariance and conditional-expectation flags disagree")
    _emit_text(dumps(document) + "\n", args.out, violation)
    return document


def _violation_for(result, label: str) -> Optional[TheoremViolation]:
    raise_for_failures(result, label)
    if result.violation_count:
        return TheoremViolation(f"{label}: {result.violation_count} violation(s)")
    return None


def cmd_sweep(args) -> Dict[str, Any]:
    if args.algebra in SHORTHAND_KINDS:
        spec = shorthand_spec(args.algebra, args.dim)
    else:
        spec = load_json_file(args.algebra)
    config = SweepConfig(dim=args.dim, algebra=spec, samples=args.samples, seed=args.seed,
                         rank=args.rank, threads=args.threads, output=args.out)
    result = run_sweep(config)
    _emit_csv("sweep", SWEEP_COLUMNS, result, args.out, _violation_for(result, "sweep"))
    return result.summary


def _parse_dims(text: str) -> tuple:
    parts = text.split(",")
    if len(parts) != 3:
        raise ValidationError(f"--dims needs three comma-separated sizes, got {text!r}")
    return tuple(safe_int_conversion(p.strip(), "dims", minimum=1, maximum=get_tolerances().max_dim)
                 for p in parts)


def cmd_ssa(args) -> Dict[str, Any]:
    config = SsaConfig(dims=_parse_dims(args.dims), samples=args.samples, seed=args.seed,
                       threads=args.threads)
    result = run_ssa(config)
    _emit_csv("ssa", SSA_COLUMNS, result, args.out, _violation_for(result, "ssa"))
    return result.summary


def cmd_oracle(args) -> Dict[str, Any]:
    partition = None
    if args.partition:
        partition = load_json_file(args.partition)
    config = OracleConfig(omega_size=args.omega, samples=args.samples, seed=args.seed,
                          threads=args.threads, partition=partition)
    result = run_oracle(config)
    _emit_csv("oracle", ORACLE_COLUMNS, result, args.out, _violation_for(result, "oracle"))
    return result.summary


COMMANDS = {
    "check": cmd_check,
    "sweep": cmd_sweep,
    "structure": cmd_structure,
    "takesaki": cmd_takesaki,
    "ssa": cmd_ssa,
    "oracle": cmd_oracle,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--seed', type=int, default=0, help='64-bit seed of the Philox streams')
    common.add_argument('--tol-overrides', dest='tol_overrides', help='JSON file of tolerance overrides')
    common.add_argument('--threads', type=int, default=1, help='worker threads for ensemble commands')
    common.add_argument('--out', help='output file (written via <out>.staging); stdout when omitted')

    parser = argparse.ArgumentParser(
        description='Stability checks for the data processing inequality under conditional expectations')
    sub = parser.add_subparsers(dest='command', required=True)

    for name in ("check", "structure", "takesaki"):
        p = sub.add_parser(name, parents=[common], help=COMMANDS[name].__doc__)
        p.add_argument('--rho', required=True, help='matrix JSON file for rho')
        if name == "check":
            p.add_argument('--sigma', required=True, help='matrix JSON file for sigma')
        p.add_argument('--algebra', required=True, help='algebra JSON file')

    p = sub.add_parser("sweep", parents=[common], help='seeded ensemble of random faithful pairs')
    p.add_argument('--dim', type=int, required=True)
    p.add_argument('--algebra', required=True,
                   help=f"algebra JSON file or one of: {', '.join(SHORTHAND_KINDS)}")
    p.add_argument('--samples', type=int, default=100)
    p.add_argument('--rank', choices=['full', 'oversampled'], default='full')

    p = sub.add_parser("ssa", parents=[common], help='strong subadditivity ensemble')
    p.add_argument('--dims', default='2,2,2')
    p.add_argument('--samples', type=int, default=100)

    p = sub.add_parser("oracle", parents=[common], help='classical diagonal oracle ensemble')
    p.add_argument('--omega', type=int, default=8)
    p.add_argument('--samples', type=int, default=100)
    p.add_argument('--partition', help='JSON file with a list of cells (random partitions when omitted)')
    return parser


def _error_object(error: BaseException) -> Dict[str, Any]:
    kind = error.kind if isinstance(error, DpiError) else NumericalError.kind
    return {"error": {"kind": kind, "type": type(error).__name__,
                      "message": sanitize_error_message(error)}}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Entry point. Returns the exit code: 0 on success, 2 on invalid input,
    3 on numerical failure or a violated inequality.
    """
    parser = build_parser()
    args = parser.parse_args(argv)

    logging.info(f"Command started: {args.command} (seed={args.seed}, threads={args.threads})")

    try:
        if args.tol_overrides:
            apply_tolerance_overrides(args.tol_overrides)
            audit_logger.warning(f"Tolerance overrides in effect for {args.command}")
        COMMANDS[args.command](args)
        logging.info(f"Command {args.command} completed successfully")
        return 0

    except Exception as e:
        error_msg = sanitize_error_message(e)
        logging.error(f"Command {args.command} failed: {error_msg}")
        if not isinstance(e, DpiError):
            logging.exception("Full exception details:")
        sys.stdout.write(dumps(to_jsonable(_error_object(e))) + "\n")
        return exit_code_for(e)
    finally:
        if args.tol_overrides:
            reset_tolerances()


if __name__ == "__main__":
    sys.exit(main())
