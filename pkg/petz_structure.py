"""
The fixed-point algebra C = {X in N : A_rho(X) = X} and the block structure
it imposes on rho and on every solution of the Petz equation R_rho(sigma_N) = sigma.

C decomposes as sum_j 1_{left,j} (x) M_{right,j}. In every block rho factors as
gamma_j (x) (unnormalized right part), gamma_j living on the LEFT factor. The
equality states are exactly sum_j w_j V_j (gamma_j (x) s_j) V_j* with free
weights w_j and free right-factor states s_j.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import svd

from algebra import (FactorDecomposition, Subalgebra, factor_decomposition,
                     span_algebra, verify_algebra)
from config import get_tolerances
from errors import (BadWeights, DimensionMismatch, NotInAlgebra, NotInvariant,
                    StructureInconsistency)
from gns_conditional import GnsProjection, delta_invariance, gns_project, modular_agreement
from linalg_core import (as_matrix, dagger, hs_norm, op_norm, partial_trace, trace_norm,
                         unvec, vec)
from recovery import RecoveryContext, petz_map, psi_map
from rng import make_generator
from states_entropy import DensityMatrix, StateLike, as_density, maximally_mixed
from stability import dpi_gap


def _fixed_point_basis(ctx: RecoveryContext) -> List[np.ndarray]:
    """Right singular vectors of Psi - 1 whose singular value is below fixed_point_rel * ||Psi||."""
    Psi = psi_map(ctx)
    n2 = Psi.shape[0]
    _, s, Vh = svd(Psi - np.eye(n2), full_matrices=False)
    cut = get_tolerances().fixed_point_rel * op_norm(Psi)
    kept = Vh[s < cut]
    return [unvec(row.conj(), ctx.n) for row in kept]


def _cesaro_limit(ctx: RecoveryContext, X: np.ndarray) -> np.ndarray:
    """
    2 C_{2N}(X) - C_N(X) with C_N the ergodic mean (1/N) sum_{j=1..N} Psi^j(X).
    Stacks the columns of X so a whole basis is averaged at once.
    """
    steps = get_tolerances().cesaro_steps
    Psi = psi_map(ctx)
    Y = X.copy()
    partial = np.zeros_like(X)
    first = None
    for j in range(1, 2 * steps + 1):
        Y = Psi @ Y
        partial += Y
        if j == steps:
            first = partial / steps
    return 2.0 * partial / (2 * steps) - first


def cesaro_check(ctx: RecoveryContext, C: Subalgebra) -> float:
    """
    Largest HS distance, over a basis of N, between the extrapolated ergodic
    mean of Psi and the rho-preserving conditional expectation onto C.
    """
    basis = ctx.alg.basis
    stacked = np.stack([vec(B) for B in basis], axis=1)
    limits = _cesaro_limit(ctx, stacked)
    gp = GnsProjection.build(ctx.rho, C)
    worst = 0.0
    for k, B in enumerate(basis):
        worst = max(worst, hs_norm(unvec(limits[:, k], ctx.n) - gns_project(gp, B)))
    return worst


def fixed_point_algebra(ctx: RecoveryContext, cross_check: bool = True) -> Subalgebra:
    """
    The eigenvalue-1 eigenspace of Psi, checked to lie in N and to close as
    a unital *-algebra; optionally cross-checked against the ergodic mean.
    """
    tol = get_tolerances()
    raw = _fixed_point_basis(ctx)
    leak = max((ctx.alg.span_residual(X) for X in raw), default=0.0)
    if leak > tol.in_algebra_tol:
        raise StructureInconsistency(f"Fixed points of Psi leave the subalgebra: residual {leak:.3e}")

    C = span_algebra(ctx.n, [ctx.alg.project(X) for X in raw], label="fixed_point")
    diagnostics = verify_algebra(C)
    if not diagnostics.is_valid(tol.structure_tol):
        raise StructureInconsistency(f"Fixed points do not form an algebra: {diagnostics}")

    if cross_check:
        distance = cesaro_check(ctx, C)
        if distance > tol.cesaro_tol:
            raise StructureInconsistency(
                f"Eigenspace and ergodic-mean routes disagree: distance {distance:.3e}")
        logging.debug(f"fixed_point_algebra: dim {C.dim}, ergodic-mean distance {distance:.2e}")
    return C


@dataclass(frozen=True, eq=False)
class FixedPointStructure:
    """C, its factor decomposition and the per-block factors of rho and rho_N."""
    ctx: RecoveryContext
    C: Subalgebra
    decomp: FactorDecomposition
    gammas: Tuple[DensityMatrix, ...]
    gammas_tilde: Tuple[DensityMatrix, ...]
    rho_blocks: Tuple[np.ndarray, ...]
    weights: np.ndarray
    residuals: Dict[str, float] = field(default_factory=dict)

    @property
    def profile(self) -> List[Tuple[int, int]]:
        return self.decomp.profile

    @property
    def n_blocks(self) -> int:
        return len(self.decomp.blocks)

    def block_state(self, j: int) -> DensityMatrix:
        """Tr_left(P_j rho P_j), normalized."""
        return DensityMatrix.from_matrix(self.rho_blocks[j] / self.weights[j], validate=False)


def _left_right(block, M: np.ndarray) -> Tuple[np.ndarray, np.ndarray, float]:
    """(Tr_right V*MV, Tr_left V*MV, Tr V*MV) for one block."""
    R = block.compress(M)
    dims = (block.d_left, block.d_right)
    return partial_trace(R, dims, "second"), partial_trace(R, dims, "first"), float(np.real(np.trace(R)))


def _reassemble(decomp: FactorDecomposition, lefts: Sequence[np.ndarray],
                rights: Sequence[np.ndarray]) -> np.ndarray:
    n = decomp.blocks[0].isometry.shape[0]
    out = np.zeros((n, n), dtype=complex)
    for block, L, R in zip(decomp.blocks, lefts, rights):
        out += block.expand(np.kron(L, R))
    return out


def build_structure(ctx: RecoveryContext, rng: Optional[np.random.Generator] = None,
                    cross_check: bool = True) -> FixedPointStructure:
    """
    Computes C and its factor decomposition, splits rho and rho_N block by
    block and verifies:

        rho   = sum_j V_j (gamma_j (x) Tr_left V_j* rho V_j) V_j*
        rho_N = sum_j V_j (gamma~_j (x) Tr_left V_j* rho_N V_j) V_j*
        E_tau(V_j (gamma_j (x) 1) V_j*) = V_j (gamma~_j (x) 1) V_j*

    together with the Delta_rho invariance of C and the agreement of the
    modular groups of rho and rho_N on C.
    """
    tol = get_tolerances()
    rng = rng if rng is not None else make_generator(0)
    C = fixed_point_algebra(ctx, cross_check=cross_check)
    decomp = factor_decomposition(C, rng)

    gammas, gammas_tilde, rho_blocks, weights = [], [], [], []
    reduced_blocks = []
    for j, block in enumerate(decomp.blocks):
        left, right, weight = _left_right(block, ctx.rho.matrix)
        if weight < tol.weight_floor:
            raise StructureInconsistency(f"Block {j} carries weight {weight:.3e} under rho")
        left_N, right_N, weight_N = _left_right(block, ctx.rho_N.matrix)
        if weight_N < tol.weight_floor:
            raise StructureInconsistency(f"Block {j} carries weight {weight_N:.3e} under rho_N")
        gammas.append(DensityMatrix.from_matrix(left / weight, validate=False))
        gammas_tilde.append(DensityMatrix.from_matrix(left_N / weight_N, validate=False))
        rho_blocks.append(right)
        reduced_blocks.append(right_N)
        weights.append(weight)

    residuals = {
        "rho_reconstruction": hs_norm(
            ctx.rho.matrix - _reassemble(decomp, [g.matrix for g in gammas], rho_blocks)),
        "rho_N_reconstruction": hs_norm(
            ctx.rho_N.matrix - _reassemble(decomp, [g.matrix for g in gammas_tilde], reduced_blocks)),
    }
    worst = 0.0
    for block, g, gt in zip(decomp.blocks, gammas, gammas_tilde):
        one = np.eye(block.d_right)
        lhs = ctx.expect(block.expand(np.kron(g.matrix, one)))
        worst = max(worst, hs_norm(lhs - block.expand(np.kron(gt.matrix, one))))
    residuals["gamma_expectation"] = worst
    _, residuals["delta_invariance"] = delta_invariance(ctx.rho, C)
    residuals["modular_agreement"] = modular_agreement(ctx.rho, C, ctx).max_residual

    failed = {k: v for k, v in residuals.items() if v > tol.structure_tol}
    if failed:
        raise StructureInconsistency(f"Fixed-point structure checks failed: {failed}")
    logging.info(f"Fixed-point algebra: dim {C.dim}, blocks {decomp.profile}")
    return FixedPointStructure(ctx, C, decomp, tuple(gammas), tuple(gammas_tilde),
                               tuple(rho_blocks), np.asarray(weights), residuals)


def conditional_expectation_C(fps: FixedPointStructure, Y) -> np.ndarray:
    """E_C(Y) = sum_j V_j (1 (x) Tr_left[(gamma_j (x) 1) V_j* Y V_j]) V_j*."""
    Y = as_matrix(Y, fps.ctx.n)
    out = np.zeros_like(Y, dtype=complex)
    for block, g in zip(fps.decomp.blocks, fps.gammas):
        weighted = np.kron(g.matrix, np.eye(block.d_right)) @ block.compress(Y)
        B = partial_trace(weighted, (block.d_left, block.d_right), "first")
        out += block.expand(np.kron(np.eye(block.d_left), B))
    return out


def dual_expectation_state(fps: FixedPointStructure, tau: StateLike) -> DensityMatrix:
    """E_C^dagger(tau) = sum_j V_j (gamma_j (x) Tr_left V_j* tau V_j) V_j*."""
    tau = as_density(tau)
    rights = [_left_right(block, tau.matrix)[1] for block in fps.decomp.blocks]
    out = _reassemble(fps.decomp, [g.matrix for g in fps.gammas], rights)
    return DensityMatrix.from_matrix(out, validate=False)


def build_equality_state(fps: FixedPointStructure, block_states: Sequence[StateLike],
                         weights: Sequence[float], verify: bool = True) -> DensityMatrix:
    """
    sigma = sum_j w_j V_j (gamma_j (x) s_j) V_j*. With `verify`, the Petz
    residual ||R_rho(sigma_N) - sigma||_1 must vanish and, for faithful
    sigma, so must the DPI gap.
    """
    tol = get_tolerances()
    w = np.asarray(weights, dtype=float).reshape(-1)
    if w.size != fps.n_blocks or len(block_states) != fps.n_blocks:
        raise DimensionMismatch(
            f"Structure has {fps.n_blocks} blocks, got {w.size} weights and {len(block_states)} states")
    if np.any(w < 0) or abs(float(w.sum()) - 1.0) > tol.normalization_tol:
        raise BadWeights(f"Weights must be a probability vector, got {w.tolist()}")

    rights = []
    for j, (block, s) in enumerate(zip(fps.decomp.blocks, block_states)):
        s = as_density(s)
        if s.dim != block.d_right:
            raise DimensionMismatch(f"Block {j} needs a {block.d_right}x{block.d_right} state, got {s.dim}x{s.dim}")
        rights.append(w[j] * s.matrix)
    sigma = DensityMatrix.from_matrix(
        _reassemble(fps.decomp, [g.matrix for g in fps.gammas], rights), validate=False)

    if verify:
        ctx = fps.ctx
        residual = trace_norm(petz_map(ctx, ctx.expect(sigma.matrix)) - sigma.matrix)
        if residual > tol.petz_residual_tol:
            raise StructureInconsistency(f"Equality state fails the Petz equation: residual {residual:.3e}")
        if sigma.faithful:
            gap = dpi_gap(ctx.rho, sigma, ctx.alg)
            if gap > tol.gap_tol:
                raise StructureInconsistency(f"Equality state has DPI gap {gap:.3e}")
    return sigma


def extract_equality_parameters(fps: FixedPointStructure,
                                sigma: StateLike) -> Tuple[List[DensityMatrix], np.ndarray]:
    """
    Block weights Tr[P_j sigma] and normalized Tr_left(P_j sigma P_j); blocks
    sigma does not reach get the maximally mixed state.
    """
    sigma = as_density(sigma)
    floor = get_tolerances().weight_floor
    states, weights = [], []
    for block in fps.decomp.blocks:
        _, right, weight = _left_right(block, sigma.matrix)
        weights.append(max(weight, 0.0))
        if weight < floor:
            states.append(maximally_mixed(block.d_right))
        else:
            states.append(DensityMatrix.from_matrix(right / weight, validate=False))
    w = np.asarray(weights)
    return states, w / w.sum()


def largest_invariant_check(ctx: RecoveryContext, B: Subalgebra,
                            C: Optional[Subalgebra] = None) -> bool:
    """Whether a Delta_rho-invariant subalgebra B of N lies inside C."""
    tol = get_tolerances()
    outside = max((ctx.alg.span_residual(X) for X in B.basis), default=0.0)
    if outside > tol.in_algebra_tol:
        raise NotInAlgebra(f"B is not contained in the subalgebra: residual {outside:.3e}")
    _, residual = delta_invariance(ctx.rho, B)
    if residual > tol.structure_tol:
        raise NotInvariant(f"B is not invariant under Delta_rho: residual {residual:.3e}")
    C = C if C is not None else fixed_point_algebra(ctx, cross_check=False)
    return all(C.span_residual(X) <= tol.structure_tol for X in B.basis)


class FixedPointEquivalence(NamedTuple):
    phi_residual: float     # ||Phi(tau) - tau||_1
    dual_residual: float    # ||E_C^dagger(tau) - tau||_1

    def consistent(self, tol: Optional[float] = None) -> bool:
        tol = get_tolerances().structure_tol if tol is None else tol
        return (self.phi_residual < tol) == (self.dual_residual < tol)


def fixed_point_equivalence(fps: FixedPointStructure, tau: StateLike) -> FixedPointEquivalence:
    ctx = fps.ctx
    tau = as_density(tau)
    phi_tau = petz_map(ctx, ctx.expect(tau.matrix))
    return FixedPointEquivalence(
        trace_norm(phi_tau - tau.matrix),
        trace_norm(dual_expectation_state(fps, tau).matrix - tau.matrix),
    )


class CoarseGapEquivalence(NamedTuple):
    gap_N: float
    gap_C: float

    def consistent(self, tol: Optional[float] = None) -> bool:
        tol = get_tolerances().gap_tol if tol is None else tol
        return (self.gap_N < tol) == (self.gap_C < tol)


def coarse_gap_equivalence(rho: StateLike, sigma: StateLike, alg: Subalgebra,
                           fps: Optional[FixedPointStructure] = None) -> CoarseGapEquivalence:
    """The DPI gap on N next to the gap on C; one vanishes exactly when the other does."""
    fps = fps or build_structure(RecoveryContext.build(rho, alg))
    return CoarseGapEquivalence(dpi_gap(rho, sigma, alg), dpi_gap(rho, sigma, fps.C))
