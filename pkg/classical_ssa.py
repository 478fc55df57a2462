"""
Classical oracle and strong subadditivity suite.

A ClassicalModel is a finite probability space with a partition into cells
and two strictly positive densities. Every classical formula here has a
quantum counterpart on diagonal matrices and the partition algebra, and
`diagonal_oracle_check` runs both sides against each other.

Tripartite reductions use `linalg_core.reduced_matrix`: the state on
C^d1 (x) C^d2 (x) C^d3 is reshaped to (a1, a2, a3, b1, b2, b3) and every
traced factor contracts a_i = b_i, so rho12, rho23, rho13, rho1, rho2, rho3
all come from the same index map.
"""

import logging
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.special import entr, rel_entr

from algebra import partition_algebra
from config import get_tolerances
from errors import (BadCellDistribution, DimensionMismatch, NonFaithful, NotNormalized,
                    SupportViolation, ValidationError)
from linalg_core import as_matrix, partial_trace, reduced_matrix, tensor_product, trace_norm
from recovery import RecoveryContext, RecoveryPair, accardi_cecchini, petz_map
from stability import dpi_gap
from states_entropy import (DensityMatrix, StateLike, as_density, is_infinite, random_density,
                            relative_entropy)


def kl_divergence(p: np.ndarray, q: np.ndarray) -> float:
    """sum p log(p/q) with 0 log 0 = 0."""
    return float(np.sum(rel_entr(p, q)))


@dataclass(frozen=True, eq=False)
class ClassicalModel:
    omega_size: int
    partition: Tuple[Tuple[int, ...], ...]
    rho: np.ndarray
    sigma: np.ndarray

    @property
    def n_cells(self) -> int:
        return len(self.partition)

    @property
    def cell_of(self) -> np.ndarray:
        """Cell index X(omega) for every point."""
        labels = np.empty(self.omega_size, dtype=int)
        for x, cell in enumerate(self.partition):
            labels[list(cell)] = x
        return labels

    def marginal(self, density: np.ndarray) -> np.ndarray:
        return np.bincount(self.cell_of, weights=density, minlength=self.n_cells)

    def conditional(self, density: np.ndarray) -> np.ndarray:
        """f(omega | X(omega)) = density(omega) / density(cell of omega)."""
        return density / self.marginal(density)[self.cell_of]


def _check_density(name: str, p, omega_size: int) -> np.ndarray:
    tol = get_tolerances()
    p = np.asarray(p, dtype=float).reshape(-1)
    if p.size != omega_size:
        raise DimensionMismatch(f"{name} has {p.size} entries, expected {omega_size}")
    if np.any(p <= 0):
        raise NonFaithful(f"{name} must be strictly positive, min entry {p.min():.3e}")
    if abs(float(p.sum()) - 1.0) > tol.state_tol:
        raise NotNormalized(f"{name} sums to {float(p.sum())!r}, expected 1")
    return p


def classical_model(omega_size: int, partition: Sequence[Sequence[int]], rho, sigma) -> ClassicalModel:
    """Validated constructor: disjoint non-empty cells covering 0..omega_size-1."""
    cells = tuple(tuple(int(i) for i in cell) for cell in partition)
    if any(len(cell) == 0 for cell in cells):
        raise ValidationError("Partition has an empty cell")
    flat = [i for cell in cells for i in cell]
    if sorted(flat) != list(range(omega_size)):
        raise ValidationError(f"Partition {cells} does not split 0..{omega_size - 1} into disjoint cells")
    return ClassicalModel(omega_size, cells,
                          _check_density("rho", rho, omega_size),
                          _check_density("sigma", sigma, omega_size))


def random_partition(omega_size: int, rng: np.random.Generator,
                     n_cells: Optional[int] = None) -> Tuple[Tuple[int, ...], ...]:
    n_cells = int(rng.integers(1, omega_size + 1)) if n_cells is None else n_cells
    order = rng.permutation(omega_size)
    cuts = np.sort(rng.choice(np.arange(1, omega_size), size=n_cells - 1, replace=False))
    return tuple(tuple(sorted(int(i) for i in part)) for part in np.split(order, cuts))


def random_classical_model(omega_size: int, rng: np.random.Generator,
                           partition: Optional[Sequence[Sequence[int]]] = None) -> ClassicalModel:
    """Densities are normalized standard exponentials (flat Dirichlet draws)."""
    partition = random_partition(omega_size, rng) if partition is None else partition
    rho = rng.standard_exponential(omega_size)
    sigma = rng.standard_exponential(omega_size)
    return classical_model(omega_size, partition, rho / rho.sum(), sigma / sigma.sum())


class ChainRecord(NamedTuple):
    S_full: float
    S_coarse: float
    conditional_term: float
    conditional_direct: float   # sum_x rho(x) KL(f(.|x) || g(.|x))


def classical_chain(model: ClassicalModel) -> ChainRecord:
    """The chain rule S(rho||sigma) = S(rho_cells||sigma_cells) + conditional term."""
    full = kl_divergence(model.rho, model.sigma)
    rho_x, sigma_x = model.marginal(model.rho), model.marginal(model.sigma)
    coarse = kl_divergence(rho_x, sigma_x)
    f, g = model.conditional(model.rho), model.conditional(model.sigma)
    direct = sum(rho_x[x] * kl_divergence(f[list(cell)], g[list(cell)])
                 for x, cell in enumerate(model.partition))
    return ChainRecord(full, coarse, full - coarse, float(direct))


def _reference_density(model: ClassicalModel, reference: str) -> np.ndarray:
    if reference == "rho":
        return model.rho
    if reference == "sigma":
        return model.sigma
    raise ValidationError(f"reference must be 'rho' or 'sigma', got {reference!r}")


def classical_recovery(model: ClassicalModel, gamma, reference: str = "rho") -> np.ndarray:
    """(R gamma)(omega) = gamma(X(omega)) f(omega | X(omega)), f the conditional of `reference`."""
    gamma = np.asarray(gamma, dtype=float).reshape(-1)
    if gamma.size != model.n_cells:
        raise BadCellDistribution(f"gamma has {gamma.size} entries, partition has {model.n_cells} cells")
    if np.any(gamma < 0) or abs(float(gamma.sum()) - 1.0) > get_tolerances().normalization_tol:
        raise BadCellDistribution(f"gamma is not a probability vector: {gamma.tolist()}")
    f = model.conditional(_reference_density(model, reference))
    return gamma[model.cell_of] * f


def classical_expectation(model: ClassicalModel, Y, reference: str = "sigma") -> np.ndarray:
    """(E Y)(x) = sum over omega in cell x of f(omega | x) Y(omega)."""
    Y = np.asarray(Y, dtype=float).reshape(-1)
    f = model.conditional(_reference_density(model, reference))
    return np.bincount(model.cell_of, weights=f * Y, minlength=model.n_cells)


def recovery_duality_residual(model: ClassicalModel, gamma, Y, reference: str = "sigma") -> float:
    """|sum_omega (R gamma)(omega) Y(omega) - sum_x gamma(x) (E Y)(x)|."""
    lhs = float(np.dot(classical_recovery(model, gamma, reference), Y))
    rhs = float(np.dot(gamma, classical_expectation(model, Y, reference)))
    return abs(lhs - rhs)


class PinskerRecord(NamedTuple):
    gap: float
    pinsker_rhs: float
    recovery_l1: float
    recovered_divergence: float   # S(rho || R_sigma(rho_cells))


def classical_pinsker_gap(model: ClassicalModel) -> PinskerRecord:
    chain = classical_chain(model)
    recovered = classical_recovery(model, model.marginal(model.rho), reference="sigma")
    l1 = float(np.sum(np.abs(model.rho - recovered)))
    return PinskerRecord(chain.conditional_term, 0.5 * l1 * l1, l1,
                         kl_divergence(model.rho, recovered))


def _cell_constant(model: ClassicalModel, per_cell: np.ndarray) -> np.ndarray:
    return np.diag(per_cell[model.cell_of]).astype(complex)


def diagonal_oracle_check(model: ClassicalModel) -> float:
    """
    Largest discrepancy between the quantum pipeline on diag(rho), diag(sigma)
    and the partition algebra, and the classical formulas: coarse-grained
    state, DPI gap, both Petz recoveries and their residuals, and the
    coarse graining A_rho of a test function.
    """
    n = model.omega_size
    alg = partition_algebra(model.partition, n)
    rho_q = DensityMatrix.from_matrix(np.diag(model.rho).astype(complex))
    sigma_q = DensityMatrix.from_matrix(np.diag(model.sigma).astype(complex))
    ctx = RecoveryContext.build(rho_q, alg)
    pair = RecoveryPair.build(rho_q, sigma_q, alg, ctx)
    sctx = pair.sigma_context()

    sizes = np.array([len(cell) for cell in model.partition], dtype=float)
    rho_x, sigma_x = model.marginal(model.rho), model.marginal(model.sigma)
    chain = classical_chain(model)
    pinsker = classical_pinsker_gap(model)
    forward = classical_recovery(model, sigma_x, reference="rho")
    backward = classical_recovery(model, rho_x, reference="sigma")
    Y = np.linspace(-1.0, 1.0, n)

    checks = {
        "rho_N": np.max(np.abs(ctx.rho_N.matrix - _cell_constant(model, rho_x / sizes))),
        "gap": abs(dpi_gap(rho_q, sigma_q, alg, pair) - chain.conditional_term),
        "petz_forward": np.max(np.abs(petz_map(ctx, pair.sigma_N.matrix) - np.diag(forward))),
        "petz_backward": np.max(np.abs(petz_map(sctx, ctx.rho_N.matrix) - np.diag(backward))),
        "petz_trace_residual": abs(trace_norm(petz_map(ctx, pair.sigma_N.matrix) - sigma_q.matrix)
                                   - float(np.sum(np.abs(forward - model.sigma)))),
        "symm_trace_residual": abs(trace_norm(petz_map(sctx, ctx.rho_N.matrix) - rho_q.matrix)
                                   - pinsker.recovery_l1),
        "coarse_graining": np.max(np.abs(
            accardi_cecchini(ctx, np.diag(Y)) - _cell_constant(model, classical_expectation(model, Y, "rho")))),
    }
    worst = max(float(v) for v in checks.values())
    logging.debug(f"diagonal_oracle_check: {checks}")
    return worst


# Tripartite states and strong subadditivity

def _entropy(M: np.ndarray) -> float:
    """-Tr M log M for a positive semidefinite M, trace not required to be 1."""
    lam = np.clip(np.linalg.eigvalsh((M + M.conj().T) / 2), 0.0, None)
    return float(np.sum(entr(lam)))


@dataclass(frozen=True, eq=False)
class TripartiteState:
    dims: Tuple[int, int, int]
    rho123: DensityMatrix

    def reduced(self, keep: Sequence[int]) -> np.ndarray:
        return reduced_matrix(self.rho123.matrix, self.dims, keep)

    @property
    def rho12(self) -> np.ndarray:
        return self.reduced((0, 1))

    @property
    def rho23(self) -> np.ndarray:
        return self.reduced((1, 2))

    @property
    def rho13(self) -> np.ndarray:
        return self.reduced((0, 2))

    @property
    def rho1(self) -> np.ndarray:
        return self.reduced((0,))

    @property
    def rho2(self) -> np.ndarray:
        return self.reduced((1,))

    @property
    def rho3(self) -> np.ndarray:
        return self.reduced((2,))


def tripartite_state(rho: StateLike, dims: Sequence[int]) -> TripartiteState:
    rho = as_density(rho)
    dims = tuple(int(d) for d in dims)
    if len(dims) != 3 or int(np.prod(dims)) != rho.dim:
        raise DimensionMismatch(f"dims {dims} do not factor a {rho.dim}x{rho.dim} state")
    return TripartiteState(dims, rho)


def random_tripartite(dims: Sequence[int], rng: np.random.Generator,
                      rank: Optional[int] = None) -> TripartiteState:
    n = int(np.prod(dims))
    return tripartite_state(random_density(n, rank, rng=rng), dims)


class SsaRecord(NamedTuple):
    ssa_gap: float
    improved_rhs: float
    mono_form_gap: float

    @property
    def identity_residual(self) -> float:
        return abs(self.ssa_gap - self.mono_form_gap)

    @property
    def improved_slack(self) -> float:
        return self.ssa_gap - self.improved_rhs


def _finite_relative_entropy(rho: np.ndarray, sigma: np.ndarray, label: str) -> float:
    value = relative_entropy(DensityMatrix.from_matrix(rho, validate=False),
                             DensityMatrix.from_matrix(sigma, validate=False))
    if is_infinite(value):
        raise SupportViolation(f"{label} is infinite: {value.diagnostic}")
    return value


def ssa_suite(ts: TripartiteState) -> SsaRecord:
    """
    ssa_gap = S12 + S23 - S123 - S2, the same quantity rewritten as
    S(rho123 || rho1 (x) rho23) - S(rho12 || rho1 (x) rho2), and the lower
    bound 2 max{S1 - S13, S3 - S13}.
    """
    rho123 = ts.rho123.matrix
    r12, r23, r13 = ts.rho12, ts.rho23, ts.rho13
    r1, r2, r3 = ts.rho1, ts.rho2, ts.rho3
    S = {name: _entropy(M) for name, M in
         (("123", rho123), ("12", r12), ("23", r23), ("13", r13), ("1", r1), ("2", r2), ("3", r3))}

    ssa_gap = S["12"] + S["23"] - S["123"] - S["2"]
    mono = (_finite_relative_entropy(rho123, tensor_product(r1, r23), "S(rho123||rho1 x rho23)")
            - _finite_relative_entropy(r12, tensor_product(r1, r2), "S(rho12||rho1 x rho2)"))
    improved = 2.0 * max(S["1"] - S["13"], S["3"] - S["13"])
    return SsaRecord(ssa_gap, improved, mono)


def _shannon(p: np.ndarray) -> float:
    return float(np.sum(entr(p)))


def classical_conditional_mutual_information(p: np.ndarray) -> float:
    """I(X:Z|Y) = H(XY) + H(YZ) - H(XYZ) - H(Y) for a joint table p[x, y, z]."""
    p = np.asarray(p, dtype=float)
    return (_shannon(p.sum(axis=2)) + _shannon(p.sum(axis=0))
            - _shannon(p) - _shannon(p.sum(axis=(0, 2))))


def conditional_entropy(rho12, dims: Tuple[int, int]) -> float:
    """S(rho12) - S(rho2), rho2 = Tr_1 rho12; positive multiples of states allowed."""
    M = as_matrix(rho12)
    return _entropy(M) - _entropy(partial_trace(M, dims, "first"))


def linear_family_state(rho_a: StateLike, rho_b: StateLike, lam: float,
                        dims: Tuple[int, int], d3: int = 2) -> TripartiteState:
    """lam rho_a (x) E + (1 - lam) rho_b (x) F, E and F orthogonal rank-one projections on C^d3."""
    if not 0.0 <= lam <= 1.0:
        raise ValidationError(f"lam must lie in [0, 1], got {lam}")
    if d3 < 2:
        raise DimensionMismatch("The third factor needs dimension at least 2")
    rho_a, rho_b = as_density(rho_a), as_density(rho_b)
    E = np.zeros((d3, d3), dtype=complex)
    F = np.zeros((d3, d3), dtype=complex)
    E[0, 0] = 1.0
    F[1, 1] = 1.0
    M = lam * tensor_product(rho_a.matrix, E) + (1.0 - lam) * tensor_product(rho_b.matrix, F)
    return tripartite_state(DensityMatrix.from_matrix(M, validate=False), (dims[0], dims[1], d3))


def concavity_deficit(rho_a: StateLike, rho_b: StateLike, lam: float, dims: Tuple[int, int]) -> float:
    """f(lam a + (1-lam) b) - lam f(a) - (1-lam) f(b) for the conditional entropy f."""
    a, b = as_density(rho_a).matrix, as_density(rho_b).matrix
    mixed = lam * a + (1.0 - lam) * b
    return (conditional_entropy(mixed, dims) - lam * conditional_entropy(a, dims)
            - (1.0 - lam) * conditional_entropy(b, dims))


class DerivativeCheck(NamedTuple):
    lhs: float        # Richardson-extrapolated d/dt f(A + tB) at t = 0
    rhs: float        # f(B)
    analytic: float   # -Tr[B12 log A12] + Tr[B2 log A2]

    @property
    def margin(self) -> float:
        return self.lhs - self.rhs


def _log_pd(M: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh((M + M.conj().T) / 2)
    if w[0] <= 0:
        raise NonFaithful(f"Matrix is not positive definite: min eigenvalue {w[0]:.3e}")
    return (V * np.log(w)) @ V.conj().T


def homogeneity_derivative_check(A, B, dims: Tuple[int, int],
                                 steps: Tuple[float, float] = (1e-4, 1e-5)) -> DerivativeCheck:
    """
    Central differences of the conditional entropy along B at two steps
    h1 = 10 h2, combined as (100 D(h2) - D(h1)) / 99 to cancel the h^2 term.
    """
    A, B = as_matrix(A), as_matrix(B)
    h1, h2 = steps

    def central(h: float) -> float:
        return (conditional_entropy(A + h * B, dims) - conditional_entropy(A - h * B, dims)) / (2 * h)

    ratio = (h1 / h2) ** 2
    lhs = (ratio * central(h2) - central(h1)) / (ratio - 1.0)
    analytic = (-float(np.real(np.trace(B @ _log_pd(A))))
                + float(np.real(np.trace(partial_trace(B, dims, "first")
                                         @ _log_pd(partial_trace(A, dims, "first"))))))
    return DerivativeCheck(lhs, conditional_entropy(B, dims), analytic)
