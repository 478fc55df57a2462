"""
Density matrices and the entropy functionals built on them.

Everything spectral goes through the double eigenbasis of a pair (rho, sigma):
with sigma = sum_i s_i |phi_i><phi_i| and rho = sum_j r_j |psi_j><psi_j|, the
relative modular operator X -> sigma X rho^{-1} is diagonal on the matrix
units |phi_i><psi_j| with eigenvalues s_i / r_j, and the overlaps
W_ij = |<phi_i|psi_j>|^2 carry all the cross information. Entropies are in nats.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from config import get_tolerances
from errors import BadRank, DimensionMismatch, NonFaithful, NotNormalized, ValidationError
from linalg_core import (EigenSystem, SQRT, as_spectral_function, check_hermitian, dagger,
                         half_line_quadrature, hermitian_eig, hermitize, negative_power,
                         power, random_ginibre, trace_norm, QuadratureResult)
from rng import make_generator


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A positive semidefinite, trace-one matrix with its cached eigensystem."""
    matrix: np.ndarray
    eig: EigenSystem

    @classmethod
    def from_matrix(cls, M, validate: bool = True) -> "DensityMatrix":
        """
        With `validate`, M must pass the hermiticity, positivity and trace
        checks. Without it M is hermitized silently; use that only for
        matrices computed from valid states.
        """
        tol = get_tolerances()
        if validate:
            H = check_hermitian(M)
            H = (H + dagger(H)) / 2
        else:
            H, _ = hermitize(M)
        eig = hermitian_eig(H, check=False)
        if validate:
            if eig.min_eigenvalue < -tol.state_tol:
                raise ValidationError(
                    f"Density matrix has negative eigenvalue {eig.min_eigenvalue:.3e}")
            trace = float(np.real(np.trace(H)))
            if abs(trace - 1.0) > tol.state_tol:
                raise NotNormalized(f"Density matrix trace is {trace!r}, expected 1")
        return cls(H, eig)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def min_eigenvalue(self) -> float:
        return self.eig.min_eigenvalue

    @property
    def max_eigenvalue(self) -> float:
        return self.eig.max_eigenvalue

    @property
    def faithful(self) -> bool:
        return self.min_eigenvalue > get_tolerances().faithful_threshold

    def require_faithful(self, name: str = "rho") -> "DensityMatrix":
        if not self.faithful:
            raise NonFaithful(
                f"{name} is not faithful: min eigenvalue {self.min_eigenvalue:.3e}")
        return self

    def power(self, p: float) -> np.ndarray:
        return self.eig.apply(power(p))

    def sqrt(self) -> np.ndarray:
        return self.eig.apply(SQRT)

    def inv_sqrt(self) -> np.ndarray:
        return self.eig.apply(negative_power(0.5))

    def inverse(self) -> np.ndarray:
        return self.eig.apply(negative_power(1.0))


StateLike = Union[DensityMatrix, np.ndarray]


def as_density(state: StateLike) -> DensityMatrix:
    if isinstance(state, DensityMatrix):
        return state
    return DensityMatrix.from_matrix(state)


def maximally_mixed(n: int) -> DensityMatrix:
    return DensityMatrix.from_matrix(np.eye(n, dtype=complex) / n)


def random_density(n: int, rank: Optional[int] = None, seed: Optional[int] = 0, *,
                   rng: Optional[np.random.Generator] = None,
                   oversample: int = 1) -> DensityMatrix:
    """
    G G* / Tr[G G*] for an n x rank complex Ginibre matrix G.

    Draws from `rng` when given, otherwise from the Philox stream keyed by
    `seed`. `oversample` widens G for full-rank draws (better conditioned
    states of the same rank).
    """
    rank = n if rank is None else int(rank)
    if not 1 <= rank <= n:
        raise BadRank(f"rank must lie in [1, {n}], got {rank}")
    if oversample > 1 and rank < n:
        raise BadRank("oversampling only applies to full-rank draws")
    rng = rng if rng is not None else make_generator(seed or 0)
    G = random_ginibre(n, rank * oversample, rng)
    M = G @ dagger(G)
    M = M / np.real(np.trace(M))
    return DensityMatrix.from_matrix(M, validate=False)


def von_neumann_entropy(rho: StateLike) -> float:
    lam = as_density(rho).eig.eigenvalues
    lam = lam[lam > 0]
    return float(-np.sum(lam * np.log(lam)))


@dataclass(frozen=True)
class InfiniteEntropy:
    """Tagged +inf for a support violation; prints and serializes as 'inf'."""
    diagnostic: str = ""

    def __float__(self) -> float:
        return math.inf

    def __str__(self) -> str:
        return "inf"


def is_infinite(value) -> bool:
    return isinstance(value, InfiniteEntropy)


@dataclass(frozen=True, eq=False)
class OverlapScratch:
    """W[i, j] = |<phi_i|psi_j>|^2 for sigma eigenvectors phi_i and rho eigenvectors psi_j."""
    rho: DensityMatrix
    sigma: DensityMatrix
    overlaps: np.ndarray

    @property
    def r(self) -> np.ndarray:
        return self.rho.eig.eigenvalues

    @property
    def s(self) -> np.ndarray:
        return self.sigma.eig.eigenvalues


def overlap_scratch(rho: StateLike, sigma: StateLike) -> OverlapScratch:
    rho, sigma = as_density(rho), as_density(sigma)
    if rho.dim != sigma.dim:
        raise DimensionMismatch(f"rho is {rho.dim}x{rho.dim}, sigma is {sigma.dim}x{sigma.dim}")
    C = dagger(sigma.eig.eigenvectors) @ rho.eig.eigenvectors
    return OverlapScratch(rho, sigma, np.abs(C) ** 2)


def relative_entropy(rho: StateLike, sigma: StateLike,
                     scratch: Optional[OverlapScratch] = None):
    """
    Tr[rho (log rho - log sigma)] in nats, or an InfiniteEntropy sentinel when
    rho puts more than support_tol of weight on the kernel of sigma.
    """
    tol = get_tolerances()
    sc = scratch or overlap_scratch(rho, sigma)
    r, s, W = sc.r, sc.s, sc.overlaps

    threshold = tol.pinv_rel * max(float(s[-1]), 0.0)
    kernel = s <= threshold
    leaked = float(np.sum(W[kernel] * r[None, :])) if np.any(kernel) else 0.0
    if leaked > tol.support_tol:
        message = f"support(rho) not inside support(sigma): weight {leaked:.3e} on ker(sigma)"
        logging.warning(message)
        return InfiniteEntropy(message)

    positive = r > 0
    self_term = float(np.sum(r[positive] * np.log(r[positive])))
    log_s = np.zeros_like(s)
    log_s[~kernel] = np.log(s[~kernel])
    cross_term = float(np.sum(W * r[None, :] * log_s[:, None]))
    return self_term - cross_term


def _faithful_pair(rho: StateLike, sigma: StateLike, scratch: Optional[OverlapScratch]) -> OverlapScratch:
    sc = scratch or overlap_scratch(rho, sigma)
    sc.rho.require_faithful("rho")
    return sc


def quasi_entropy_t(rho: StateLike, sigma: StateLike, t: float,
                    scratch: Optional[OverlapScratch] = None) -> float:
    """S_(t)(rho||sigma) = Tr[(t + Delta_{sigma,rho})^{-1} rho] for t > 0."""
    if t <= 0:
        raise ValidationError(f"t must be positive, got {t}")
    sc = _faithful_pair(rho, sigma, scratch)
    r = sc.r[None, :]
    q = np.clip(sc.s, 0.0, None)[:, None] / r
    return float(np.sum(sc.overlaps * r / (t + q)))


def quasi_entropy_f(rho: StateLike, sigma: StateLike, f,
                    scratch: Optional[OverlapScratch] = None) -> float:
    """<rho^{1/2}, f(Delta_{sigma,rho}) rho^{1/2}>_HS = sum_ij f(s_i/r_j) W_ij r_j."""
    sc = _faithful_pair(rho, sigma, scratch)
    spec = as_spectral_function(f)
    r = sc.r[None, :]
    q = np.clip(sc.s, 0.0, None)[:, None] / r
    with np.errstate(divide='ignore'):
        values = np.asarray(spec.func(q), dtype=float) * np.ones_like(q)
    return float(np.sum(values * sc.overlaps * r))


def integral_log_check(rho: StateLike, sigma: StateLike, panels: Optional[int] = None,
                       order: Optional[int] = None,
                       scratch: Optional[OverlapScratch] = None) -> QuadratureResult:
    """
    Integral over t in (0, inf) of S_(t)(rho||sigma) - 1/(1+t), which equals
    the relative entropy. The integrand is evaluated in the cancellation-free
    form sum_ij W_ij r_j (1 - q_ij) / ((t + q_ij)(1 + t)), q_ij = s_i / r_j.
    """
    sc = _faithful_pair(rho, sigma, scratch)
    sc.sigma.require_faithful("sigma")
    r = sc.r[None, :]
    q = sc.s[:, None] / r
    weight = (sc.overlaps * r * (1.0 - q)).ravel()
    q = q.ravel()

    def integrand(t: float) -> float:
        return float(np.sum(weight / ((t + q) * (1.0 + t))))

    return half_line_quadrature(integrand, panels, order)


def fidelity(rho: StateLike, sigma: StateLike) -> float:
    """F = ||sqrt(rho) sqrt(sigma)||_1^2."""
    rho, sigma = as_density(rho), as_density(sigma)
    return trace_norm(rho.sqrt() @ sigma.sqrt()) ** 2


def trace_distance(rho: StateLike, sigma: StateLike) -> float:
    """||rho - sigma||_1 (not halved)."""
    rho, sigma = as_density(rho), as_density(sigma)
    return trace_norm(rho.matrix - sigma.matrix)


def joint_convexity_gap(rho1: StateLike, rho2: StateLike, sigma1: StateLike,
                        sigma2: StateLike, lam: float) -> float:
    """lam S(rho1||sigma1) + (1-lam) S(rho2||sigma2) - S(mixture||mixture); >= 0."""
    rho1, rho2, sigma1, sigma2 = map(as_density, (rho1, rho2, sigma1, sigma2))
    rho = DensityMatrix.from_matrix(lam * rho1.matrix + (1 - lam) * rho2.matrix, validate=False)
    sigma = DensityMatrix.from_matrix(lam * sigma1.matrix + (1 - lam) * sigma2.matrix, validate=False)
    return (lam * relative_entropy(rho1, sigma1) + (1 - lam) * relative_entropy(rho2, sigma2)
            - relative_entropy(rho, sigma))


@dataclass(frozen=True, eq=False)
class RelModular:
    """Delta_{sigma,rho}: X -> sigma X rho^{-1}, for faithful rho."""
    sigma: DensityMatrix
    rho: DensityMatrix

    def __post_init__(self):
        self.rho.require_faithful("rho")
        if self.rho.dim != self.sigma.dim:
            raise DimensionMismatch("rho and sigma have different dimensions")

    @classmethod
    def of(cls, sigma: StateLike, rho: StateLike) -> "RelModular":
        return cls(as_density(sigma), as_density(rho))

    @property
    def ratios(self) -> np.ndarray:
        """s_i / r_j, the spectrum in the double eigenbasis."""
        s = np.clip(self.sigma.eig.eigenvalues, 0.0, None)
        return s[:, None] / self.rho.eig.eigenvalues[None, :]

    def _to_eigenbasis(self, X: np.ndarray) -> np.ndarray:
        return dagger(self.sigma.eig.eigenvectors) @ X @ self.rho.eig.eigenvectors

    def _from_eigenbasis(self, Y: np.ndarray) -> np.ndarray:
        return self.sigma.eig.eigenvectors @ Y @ dagger(self.rho.eig.eigenvectors)

    def apply(self, X: np.ndarray) -> np.ndarray:
        return self.sigma.matrix @ X @ self.rho.inverse()

    def apply_function(self, f, X: np.ndarray) -> np.ndarray:
        spec = as_spectral_function(f)
        return self._from_eigenbasis(spec.func(self.ratios) * self._to_eigenbasis(X))

    def resolvent(self, t: float, X: np.ndarray) -> np.ndarray:
        """(t + Delta)^{-1} X."""
        return self._from_eigenbasis(self._to_eigenbasis(X) / (t + self.ratios))

    def power(self, p: float, X: np.ndarray) -> np.ndarray:
        return self._from_eigenbasis(np.power(self.ratios, p) * self._to_eigenbasis(X))

    def norm(self) -> float:
        return self.sigma.max_eigenvalue / self.rho.min_eigenvalue

    def superoperator(self) -> np.ndarray:
        """sigma kron (rho^{-1})^T acting on row-major vec(X)."""
        return np.kron(self.sigma.matrix, self.rho.inverse().T)


def rel_modular_apply(rm: RelModular, X) -> np.ndarray:
    return rm.apply(np.asarray(X, dtype=complex))


def rel_modular_norm(rm: RelModular) -> float:
    return rm.norm()


def rel_modular_resolvent(rm: RelModular, t: float, X) -> np.ndarray:
    return rm.resolvent(t, np.asarray(X, dtype=complex))


def rel_modular_power(rm: RelModular, p: float, X) -> np.ndarray:
    return rm.power(p, np.asarray(X, dtype=complex))


def rel_modular_superoperator(rm: RelModular) -> np.ndarray:
    return rm.superoperator()


def gns_inner(rho: StateLike, X, Y) -> complex:
    """rho(X* Y) = Tr[rho X* Y]."""
    R = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho)
    return complex(np.trace(R @ dagger(np.asarray(X)) @ np.asarray(Y)))


def kms_inner(rho: StateLike, X, Y) -> complex:
    """Tr[rho^{1/2} X* rho^{1/2} Y]."""
    root = as_density(rho).sqrt()
    return complex(np.trace(root @ dagger(np.asarray(X)) @ root @ np.asarray(Y)))
