"""
The GNS-orthogonal projection P_rho onto N and the checks that decide
whether it is a conditional expectation.

For faithful rho the following are equivalent, and every report here
carries all three so disagreements surface:
  * P_rho maps self-adjoint elements to self-adjoint elements (realness);
  * N is invariant under Delta_rho: A -> rho A rho^{-1};
  * P_rho is a conditional expectation (bimodule, Schwarz, completely positive).
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, NamedTuple, Optional

import numpy as np

from algebra import Subalgebra, full_algebra
from config import get_tolerances
from errors import NotInvariant, SingularInput
from linalg_core import (as_matrix, choi_matrix, dagger, hs_norm, matrix_unit,
                         min_hermitian_eigenvalue, op_norm, unvec, vec)
from recovery import RecoveryContext, accardi_cecchini, psi_map
from states_entropy import DensityMatrix, StateLike, as_density


@dataclass(frozen=True, eq=False)
class GnsProjection:
    rho: DensityMatrix
    alg: Subalgebra
    gram_inverse: np.ndarray
    gram_condition: float

    @classmethod
    def build(cls, rho: StateLike, alg: Subalgebra) -> "GnsProjection":
        """G_kl = rho(B_k* B_l), inverted through its eigendecomposition."""
        rho = as_density(rho).require_faithful("rho")
        rows = alg.basis_rows
        right = (alg.basis @ rho.matrix).reshape(alg.dim, -1)
        G = rows.conj() @ right.T
        w, V = np.linalg.eigh((G + dagger(G)) / 2)
        if w[0] <= 0:
            raise SingularInput(f"GNS Gram matrix is not positive definite: min eigenvalue {w[0]:.3e}")
        condition = float(w[-1] / w[0])
        if condition > get_tolerances().gram_condition_warn:
            logging.warning(f"GNS Gram matrix is ill-conditioned: condition number {condition:.3e}")
        return cls(rho, alg, (V / w) @ dagger(V), condition)

    def superoperator(self) -> np.ndarray:
        """vec(P(X)) = B^T G^{-1} B^* (1 kron rho^T) vec(X)."""
        rows = self.alg.basis_rows
        n = self.alg.ambient_dim
        return rows.T @ self.gram_inverse @ rows.conj() @ np.kron(np.eye(n), self.rho.matrix.T)


def gns_project(gp: GnsProjection, X) -> np.ndarray:
    """P_rho(X) = sum_kl B_k (G^{-1})_kl rho(B_l* X)."""
    X = as_matrix(X, gp.alg.ambient_dim)
    b = gp.alg.basis_rows.conj() @ vec(X @ gp.rho.matrix)
    coeffs = gp.gram_inverse @ b
    return unvec(coeffs @ gp.alg.basis_rows, gp.alg.ambient_dim)


def is_real(gp: GnsProjection):
    """(flag, max over matrix units E of ||P(E*) - P(E)*||_HS)."""
    n = gp.alg.ambient_dim
    worst = 0.0
    for i in range(n):
        for j in range(n):
            E = matrix_unit(n, i, j)
            worst = max(worst, hs_norm(gns_project(gp, dagger(E)) - dagger(gns_project(gp, E))))
    return worst < get_tolerances().realness_tol, worst


def delta_invariance(rho: StateLike, alg: Subalgebra):
    """(flag, max_k ||rho B_k rho^{-1} - E_tau(rho B_k rho^{-1})||_HS)."""
    rho = as_density(rho).require_faithful("rho")
    inverse = rho.inverse()
    worst = 0.0
    for B in alg.basis:
        Y = rho.matrix @ B @ inverse
        worst = max(worst, hs_norm(Y - alg.project(Y)))
    return worst < get_tolerances().realness_tol, worst


def _unit(X: np.ndarray) -> np.ndarray:
    return X / hs_norm(X)


class ConditionalExpectationDiagnostics(NamedTuple):
    module_residual: float
    schwarz_violation: float
    choi_violation: float
    is_conditional_expectation: bool
    is_real: bool
    delta_invariant: bool

    @property
    def consistent(self) -> bool:
        return self.is_conditional_expectation == self.is_real == self.delta_invariant


def is_conditional_expectation(gp: GnsProjection, rng: np.random.Generator,
                               trials: int = 3) -> ConditionalExpectationDiagnostics:
    """
    Bimodule property on random A, B in N and X in M (HS-normalized), the
    Schwarz inequality P(X)*P(X) <= P(X*X), and complete positivity through
    the Choi matrix. Non-Hermitian parts count as violations.
    """
    tol = get_tolerances().realness_tol
    n = gp.alg.ambient_dim
    module = 0.0
    schwarz = 0.0
    full = full_algebra(n)
    for _ in range(trials):
        A = _unit(gp.alg.random_element(rng))
        B = _unit(gp.alg.random_element(rng))
        X = _unit(full.random_element(rng))
        module = max(module, hs_norm(gns_project(gp, A @ X @ B) - A @ gns_project(gp, X) @ B))
        PX = gns_project(gp, X)
        D = gns_project(gp, dagger(X) @ X) - dagger(PX) @ PX
        schwarz = max(schwarz, op_norm(D - dagger(D)) / 2, -min_hermitian_eigenvalue(D))

    J = choi_matrix(gp.superoperator(), n)
    choi = max(op_norm(J - dagger(J)) / 2, -min_hermitian_eigenvalue(J))

    flag = max(module, schwarz, choi) < tol
    real_flag, _ = is_real(gp)
    invariant_flag, _ = delta_invariance(gp.rho, gp.alg)
    return ConditionalExpectationDiagnostics(module, schwarz, choi, flag, real_flag, invariant_flag)


class ModularAgreement(NamedTuple):
    max_residual: float
    fixed_point_residual: float
    half_power_residual: float


def modular_agreement(rho: StateLike, alg: Subalgebra,
                      ctx: Optional[RecoveryContext] = None) -> ModularAgreement:
    """
    For Delta_rho-invariant N: max_A ||Delta_rho(A) - Delta_{rho_N}(A)||_HS over
    the basis, the same for the 1/2 powers, and max_A ||A_rho(A) - A||_HS.
    """
    invariant, residual = delta_invariance(rho, alg)
    if not invariant:
        raise NotInvariant(f"Algebra is not invariant under Delta_rho: residual {residual:.3e}")
    ctx = ctx or RecoveryContext.build(rho, alg)
    rho_inv = ctx.rho.inverse()
    rho_N_inv = ctx.rho_N.inverse()
    rho_inv_sqrt = ctx.rho.inv_sqrt()

    modular = fixed = half = 0.0
    for A in alg.basis:
        modular = max(modular, hs_norm(ctx.rho.matrix @ A @ rho_inv - ctx.rho_N.matrix @ A @ rho_N_inv))
        half = max(half, hs_norm(ctx.rho_sqrt @ A @ rho_inv_sqrt
                                 - ctx.rho_N_sqrt @ A @ ctx.rho_N_inv_sqrt))
        fixed = max(fixed, hs_norm(accardi_cecchini(ctx, A) - A))
    return ModularAgreement(modular, fixed, half)


def takesaki_report(rho: StateLike, alg: Subalgebra, rng: np.random.Generator) -> Dict[str, Any]:
    """Everything the `takesaki` command prints."""
    gp = GnsProjection.build(rho, alg)
    real_flag, real_violation = is_real(gp)
    invariant_flag, invariance_residual = delta_invariance(gp.rho, alg)
    ce = is_conditional_expectation(gp, rng)

    report: Dict[str, Any] = {
        "is_real": real_flag,
        "realness_violation": real_violation,
        "delta_invariant": invariant_flag,
        "delta_invariance_residual": invariance_residual,
        "is_conditional_expectation": ce.is_conditional_expectation,
        "module_residual": ce.module_residual,
        "schwarz_violation": ce.schwarz_violation,
        "choi_violation": ce.choi_violation,
        "flags_consistent": ce.consistent,
        "gram_condition": gp.gram_condition,
    }
    if invariant_flag:
        ctx = RecoveryContext.build(gp.rho, alg)
        agreement = modular_agreement(gp.rho, alg, ctx)
        report.update(agreement._asdict())
        report["projection_vs_coarse_graining"] = float(
            np.max(np.abs(gp.superoperator() - psi_map(ctx))))
    if not ce.consistent:
        logging.warning(f"Takesaki flags disagree: {report}")
    return report
