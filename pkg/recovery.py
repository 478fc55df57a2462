"""
Coarse graining and recovery for a faithful state rho and a subalgebra N.

    A_rho(X) = rho_N^{-1/2} E_tau(rho^{1/2} X rho^{1/2}) rho_N^{-1/2}   (N-valued, unital)
    R_rho(g) = rho^{1/2} rho_N^{-1/2} g rho_N^{-1/2} rho^{1/2}           (HS adjoint on N)
    U(X)     = E_tau(X) rho_N^{-1/2} rho^{1/2}                          (isometric on N)

All fractional powers come from eigendecompositions cached on the context.
"""

import logging
from dataclasses import dataclass
from typing import List, NamedTuple, Optional

import numpy as np

from algebra import Subalgebra, conditional_expectation_tau, projection_superoperator
from config import get_tolerances
from errors import DimensionMismatch, NotInAlgebra, NotNormalized
from linalg_core import (as_matrix, dagger, half_line_quadrature, hermitize, hs_inner,
                         hs_norm, sandwich_superoperator, t_grid, trace_norm)
from states_entropy import (DensityMatrix, RelModular, StateLike, as_density, quasi_entropy_t)


@dataclass(frozen=True, eq=False)
class RecoveryContext:
    """rho, N and the cached square roots of rho and rho_N = E_tau(rho)."""
    rho: DensityMatrix
    alg: Subalgebra
    rho_sqrt: np.ndarray
    rho_N: DensityMatrix
    rho_N_sqrt: np.ndarray
    rho_N_inv_sqrt: np.ndarray

    @classmethod
    def build(cls, rho: StateLike, alg: Subalgebra, name: str = "rho") -> "RecoveryContext":
        rho = as_density(rho).require_faithful(name)
        if rho.dim != alg.ambient_dim:
            raise DimensionMismatch(
                f"{name} is {rho.dim}x{rho.dim} but the algebra lives in M_{alg.ambient_dim}")
        rho_N = DensityMatrix.from_matrix(conditional_expectation_tau(alg, rho.matrix), validate=False)
        rho_N.require_faithful(f"{name}_N")
        return cls(rho, alg, rho.sqrt(), rho_N, rho_N.sqrt(), rho_N.inv_sqrt())

    @property
    def n(self) -> int:
        return self.rho.dim

    def expect(self, X: np.ndarray) -> np.ndarray:
        return self.alg.project(X)


def accardi_cecchini(ctx: RecoveryContext, X) -> np.ndarray:
    X = as_matrix(X, ctx.n)
    inner = ctx.expect(ctx.rho_sqrt @ X @ ctx.rho_sqrt)
    return ctx.rho_N_inv_sqrt @ inner @ ctx.rho_N_inv_sqrt


def petz_map(ctx: RecoveryContext, X) -> np.ndarray:
    """The linear map R_rho on an arbitrary matrix, no validation."""
    X = as_matrix(X, ctx.n)
    left = ctx.rho_sqrt @ ctx.rho_N_inv_sqrt
    return left @ X @ dagger(left)


def petz_recovery(ctx: RecoveryContext, gamma: StateLike) -> DensityMatrix:
    """
    R_rho(gamma) for a state gamma in N, hermitized; a trace drift up to
    renormalize_tol is renormalized away, larger drift raises.
    """
    tol = get_tolerances()
    gamma = as_density(gamma)
    residual = ctx.alg.span_residual(gamma.matrix)
    if residual > tol.in_algebra_tol:
        raise NotInAlgebra(f"gamma is not in the subalgebra: relative residual {residual:.3e}")

    out, asymmetry = hermitize(petz_map(ctx, gamma.matrix))
    trace = float(np.real(np.trace(out)))
    drift = abs(trace - 1.0)
    if drift > tol.renormalize_tol:
        raise NotNormalized(f"Recovered state trace drifted to {trace!r}")
    if drift > 0:
        logging.debug(f"petz_recovery: renormalized trace drift {drift:.2e} (asymmetry {asymmetry:.2e})")
        out = out / trace
    return DensityMatrix.from_matrix(out, validate=False)


def embedding_U(ctx: RecoveryContext, X) -> np.ndarray:
    X = as_matrix(X, ctx.n)
    return ctx.expect(X) @ ctx.rho_N_inv_sqrt @ ctx.rho_sqrt


def embedding_U_adjoint(ctx: RecoveryContext, Y) -> np.ndarray:
    Y = as_matrix(Y, ctx.n)
    return ctx.expect(Y @ ctx.rho_sqrt) @ ctx.rho_N_inv_sqrt


@dataclass(frozen=True, eq=False)
class RecoveryPair:
    """
    A (rho, sigma) pair over the same N: the rho context, sigma_N and both
    relative modular operators Delta_{sigma,rho} and Delta_{sigma_N,rho_N}.
    """
    ctx: RecoveryContext
    sigma: DensityMatrix
    sigma_N: DensityMatrix
    delta: RelModular
    delta_N: RelModular

    @classmethod
    def build(cls, rho: StateLike, sigma: StateLike, alg: Subalgebra,
              ctx: Optional[RecoveryContext] = None) -> "RecoveryPair":
        ctx = ctx or RecoveryContext.build(rho, alg)
        sigma = as_density(sigma)
        if sigma.dim != ctx.n:
            raise DimensionMismatch("rho and sigma have different dimensions")
        sigma_N = DensityMatrix.from_matrix(ctx.expect(sigma.matrix), validate=False)
        return cls(ctx, sigma, sigma_N, RelModular(sigma, ctx.rho), RelModular(sigma_N, ctx.rho_N))

    def sigma_context(self) -> RecoveryContext:
        """The context with the roles swapped (needs sigma faithful)."""
        return RecoveryContext.build(self.sigma, self.ctx.alg, name="sigma")


def w_vector(ctx: RecoveryContext, sigma: StateLike, t: float,
             pair: Optional[RecoveryPair] = None) -> np.ndarray:
    """w_t = U (t + Delta_{sigma_N,rho_N})^{-1} rho_N^{1/2} - (t + Delta_{sigma,rho})^{-1} rho^{1/2}."""
    pair = pair or RecoveryPair.build(ctx.rho, sigma, ctx.alg, ctx)
    inner = pair.delta_N.resolvent(t, ctx.rho_N_sqrt)
    return embedding_U(ctx, inner) - pair.delta.resolvent(t, ctx.rho_sqrt)


class ResolventIdentity(NamedTuple):
    t: float
    quasi_gap: float            # S_(t)(rho||sigma) - S_(t)(rho_N||sigma_N)
    w_energy: float             # <w, (t + Delta) w>
    embedded_resolvent: float   # <v, U* A^{-1} U v>
    reduced_resolvent: float    # <v, B^{-1} v>
    w_norm_sq: float

    @property
    def gap_residual(self) -> float:
        return abs(self.quasi_gap - self.w_energy)

    @property
    def isometry_residual(self) -> float:
        return abs(self.embedded_resolvent - (self.reduced_resolvent + self.w_energy))

    @property
    def positivity_margin(self) -> float:
        """<w, A w> - t ||w||^2, nonnegative."""
        return self.w_energy - self.t * self.w_norm_sq


def resolvent_identity(pair: RecoveryPair, t: float) -> ResolventIdentity:
    ctx = pair.ctx
    w = w_vector(ctx, pair.sigma, t, pair)
    w_energy = float(np.real(hs_inner(w, t * w + pair.delta.apply(w))))
    v_full = embedding_U(ctx, ctx.rho_N_sqrt)
    embedded = float(np.real(hs_inner(v_full, pair.delta.resolvent(t, v_full))))
    reduced = float(np.real(hs_inner(ctx.rho_N_sqrt, pair.delta_N.resolvent(t, ctx.rho_N_sqrt))))
    quasi_gap = (quasi_entropy_t(ctx.rho, pair.sigma, t)
                 - quasi_entropy_t(ctx.rho_N, pair.sigma_N, t))
    return ResolventIdentity(t, quasi_gap, w_energy, embedded, reduced, hs_norm(w) ** 2)


def w_diagnostics(pair: RecoveryPair, ts: Optional[np.ndarray] = None) -> List[ResolventIdentity]:
    """The resolvent identities over the configured logarithmic t-grid."""
    ts = t_grid() if ts is None else ts
    return [resolvent_identity(pair, float(t)) for t in ts]


class SqrtReconstruction(NamedTuple):
    integral: np.ndarray
    target: np.ndarray
    error_estimate: float

    @property
    def residual(self) -> float:
        return hs_norm(self.integral - self.target)


def sqrt_integral_reconstruction(pair: RecoveryPair, panels: Optional[int] = None,
                                 order: Optional[int] = None) -> SqrtReconstruction:
    """
    -(1/pi) int_0^inf t^{1/2} w_t dt against sigma_N^{1/2} rho_N^{-1/2} rho^{1/2} - sigma^{1/2}.

    From x^{1/2} = (1/pi) int t^{1/2} (1/t - 1/(t + x)) dt the 1/t terms cancel
    (U rho_N^{1/2} = rho^{1/2}) and the resolvent terms come in with a minus
    sign. Integrated in s = t^{1/2}, where the integrand 2 s^2 w_{s^2} stays bounded.
    """
    ctx = pair.ctx

    def integrand(s: float) -> np.ndarray:
        return 2.0 * s * s * w_vector(ctx, pair.sigma, s * s, pair)

    value, error = half_line_quadrature(integrand, panels, order)
    target = pair.sigma_N.sqrt() @ ctx.rho_N_inv_sqrt @ ctx.rho_sqrt - pair.sigma.sqrt()
    return SqrtReconstruction(-value / np.pi, target, error / np.pi)


class PetzResiduals(NamedTuple):
    petz_trace_residual: float
    symm_trace_residual: float
    eqcase_hs_residual: float
    eqcase_symm_hs_residual: float


def petz_residuals(ctx: RecoveryContext, sigma: StateLike,
                   pair: Optional[RecoveryPair] = None) -> PetzResiduals:
    """
    ||R_rho(sigma_N) - sigma||_1, ||R_sigma(rho_N) - rho||_1,
    ||sigma_N^{1/2} rho_N^{-1/2} rho^{1/2} - sigma^{1/2}||_2 and
    ||rho_N^{1/2} sigma_N^{-1/2} sigma^{1/2} - rho^{1/2}||_2.
    """
    pair = pair or RecoveryPair.build(ctx.rho, sigma, ctx.alg, ctx)
    sigma = pair.sigma
    sctx = pair.sigma_context()

    recovered_sigma = petz_map(ctx, pair.sigma_N.matrix)
    recovered_rho = petz_map(sctx, ctx.rho_N.matrix)
    hs_forward = pair.sigma_N.sqrt() @ ctx.rho_N_inv_sqrt @ ctx.rho_sqrt - sigma.sqrt()
    hs_backward = ctx.rho_N_sqrt @ sctx.rho_N_inv_sqrt @ sctx.rho_sqrt - ctx.rho_sqrt
    return PetzResiduals(
        trace_norm(recovered_sigma - sigma.matrix),
        trace_norm(recovered_rho - ctx.rho.matrix),
        hs_norm(hs_forward),
        hs_norm(hs_backward),
    )


def phi_map(ctx: RecoveryContext) -> np.ndarray:
    """Phi = R_rho o E_tau as an n^2 x n^2 matrix."""
    left = ctx.rho_sqrt @ ctx.rho_N_inv_sqrt
    return sandwich_superoperator(left, dagger(left)) @ projection_superoperator(ctx.alg)


def psi_map(ctx: RecoveryContext) -> np.ndarray:
    """Psi = (inclusion) o A_rho as an n^2 x n^2 matrix."""
    outer = sandwich_superoperator(ctx.rho_N_inv_sqrt, ctx.rho_N_inv_sqrt)
    inner = sandwich_superoperator(ctx.rho_sqrt, ctx.rho_sqrt)
    return outer @ projection_superoperator(ctx.alg) @ inner


# Residuals of the exact identities, one number each

def kms_duality_residual(ctx: RecoveryContext, X, Y) -> float:
    """|<X, Y>_{KMS,rho} - <A_rho(X), Y>_{KMS,rho_N}| for Y in N."""
    lhs = np.trace(ctx.rho_sqrt @ dagger(X) @ ctx.rho_sqrt @ Y)
    AX = accardi_cecchini(ctx, X)
    rhs = np.trace(ctx.rho_N_sqrt @ dagger(AX) @ ctx.rho_N_sqrt @ Y)
    return float(abs(lhs - rhs))


def petz_adjoint_residual(ctx: RecoveryContext, gamma, X) -> float:
    """|Tr[gamma A_rho(X)] - Tr[R_rho(gamma) X]| for gamma in N."""
    lhs = np.trace(gamma @ accardi_cecchini(ctx, X))
    rhs = np.trace(petz_map(ctx, gamma) @ X)
    return float(abs(lhs - rhs))


def intertwining_residual(pair: RecoveryPair, X, Y) -> float:
    """|<U X, Delta U Y> - <X, Delta_N Y>| for X, Y in N."""
    ctx = pair.ctx
    lhs = hs_inner(embedding_U(ctx, X), pair.delta.apply(embedding_U(ctx, Y)))
    rhs = hs_inner(X, pair.delta_N.apply(Y))
    return float(abs(lhs - rhs))


def gns_norm(rho: DensityMatrix, X: np.ndarray) -> float:
    return float(np.sqrt(max(np.real(np.trace(rho.matrix @ dagger(X) @ X)), 0.0)))
