"""
Unital *-subalgebras of M_n(C).

A Subalgebra is stored as a Hilbert-Schmidt orthonormal basis; the tracial
conditional expectation onto it is the HS-orthogonal projection onto that
basis. Commutants and intersections are computed as null spaces on the
vectorized space; the factor decomposition comes from spectral projections
of random central and block elements.
"""

import logging
from dataclasses import dataclass
from typing import Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import polar, svd

from config import get_tolerances
from errors import (DegenerateRandomElement, DimensionMismatch,
                    StructureInconsistency, ValidationError)
from linalg_core import (as_matrix, dagger, hs_norm, matrix_unit, partial_trace,
                         random_ginibre, random_unitary, tensor_product, unvec, vec)

_TINY = np.finfo(float).tiny


@dataclass(frozen=True, eq=False)
class Subalgebra:
    """
    span(basis) inside M_n(C); basis has shape (k, n, n) and is orthonormal
    in <X, Y> = Tr[X^* Y]. Builders below guarantee the algebra invariants;
    `verify_algebra` measures them for anything else.
    """
    ambient_dim: int
    basis: np.ndarray
    label: str = ""

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def basis_rows(self) -> np.ndarray:
        return self.basis.reshape(self.dim, -1)

    @property
    def contains_identity(self) -> bool:
        n = self.ambient_dim
        return self.span_residual(np.eye(n)) < get_tolerances().span_tol

    def coefficients(self, X: np.ndarray) -> np.ndarray:
        """<B_k, X>_HS for every basis element."""
        return self.basis_rows.conj() @ vec(X)

    def project(self, X: np.ndarray) -> np.ndarray:
        return unvec(self.coefficients(X) @ self.basis_rows, self.ambient_dim)

    def span_residual(self, X: np.ndarray) -> float:
        """||X - E(X)||_HS / ||X||_HS (0 for X = 0)."""
        X = np.asarray(X, dtype=complex)
        norm = hs_norm(X)
        if norm < _TINY:
            return 0.0
        return hs_norm(X - self.project(X)) / norm

    def contains(self, X: np.ndarray, tol: Optional[float] = None) -> bool:
        tol = get_tolerances().span_tol if tol is None else tol
        return self.span_residual(X) <= tol

    def span_distance(self, other: "Subalgebra") -> float:
        """Largest relative residual of either basis against the other span."""
        if self.ambient_dim != other.ambient_dim:
            raise DimensionMismatch("Algebras live in different matrix sizes")
        forward = max((other.span_residual(B) for B in self.basis), default=0.0)
        backward = max((self.span_residual(B) for B in other.basis), default=0.0)
        return max(forward, backward)

    def same_span(self, other: "Subalgebra", tol: float = 1e-9) -> bool:
        return self.dim == other.dim and self.span_distance(other) <= tol

    def random_element(self, rng: np.random.Generator, hermitian: bool = False) -> np.ndarray:
        coeffs = random_ginibre(1, self.dim, rng)[0]
        X = np.tensordot(coeffs, self.basis, axes=1)
        if hermitian:
            X = (X + dagger(X)) / 2
        return X

    def random_hermitian_element(self, rng: np.random.Generator) -> np.ndarray:
        """Real normal combination of the Hermitian and anti-Hermitian parts of each basis element."""
        a = rng.standard_normal(self.dim)
        b = rng.standard_normal(self.dim)
        re_parts = (self.basis + np.conj(np.transpose(self.basis, (0, 2, 1)))) / 2
        im_parts = (self.basis - np.conj(np.transpose(self.basis, (0, 2, 1)))) / 2j
        return np.tensordot(a, re_parts, axes=1) + np.tensordot(b, im_parts, axes=1)


def _extend_orthonormal(rows: List[np.ndarray], candidates: Iterable[np.ndarray],
                        tol: float) -> List[np.ndarray]:
    """
    Gram-Schmidt with one re-orthogonalization pass. A candidate is new when
    its residual against the current span exceeds tol times its own norm.
    Returns the vectors that were added; `rows` is extended in place.
    """
    added = []
    for candidate in candidates:
        v = vec(candidate).copy()
        norm0 = np.linalg.norm(v)
        if norm0 < _TINY:
            continue
        for _ in range(2):
            if rows:
                B = np.asarray(rows)
                v = v - B.T @ (B.conj() @ v)
        r = np.linalg.norm(v)
        if r > tol * norm0:
            v = v / r
            rows.append(v)
            added.append(v)
    return added


def span_algebra(n: int, matrices: Sequence[np.ndarray], label: str = "") -> Subalgebra:
    """Orthonormalize `matrices` into a Subalgebra without closing them."""
    rows: List[np.ndarray] = []
    _extend_orthonormal(rows, [as_matrix(M, n) for M in matrices], get_tolerances().span_tol)
    basis = np.asarray(rows).reshape(len(rows), n, n) if rows else np.zeros((0, n, n), dtype=complex)
    return Subalgebra(n, basis, label)


def close_generators(n: int, generators: Sequence[np.ndarray], label: str = "generated") -> Subalgebra:
    """
    Smallest unital *-subalgebra containing the generators.

    Seeds the span with 1 and the generators with their adjoints, then
    alternates product and adjoint closure over the frontier of newly added
    elements until nothing new appears.
    """
    tol = get_tolerances().span_tol
    mats = [as_matrix(G, n) for G in generators]
    rows: List[np.ndarray] = []
    seed = [np.eye(n, dtype=complex)] + mats + [dagger(M) for M in mats]
    frontier = _extend_orthonormal(rows, seed, tol)

    rounds = 0
    while frontier:
        rounds += 1
        current = [unvec(r, n) for r in rows]
        fresh = [unvec(r, n) for r in frontier]
        candidates = []
        for F in fresh:
            candidates.append(dagger(F))
            for B in current:
                candidates.append(F @ B)
                candidates.append(B @ F)
        frontier = _extend_orthonormal(rows, candidates, tol)
        if len(rows) > n * n:
            raise StructureInconsistency(f"Closure exceeded n^2 = {n * n} dimensions")

    logging.debug(f"close_generators: dimension {len(rows)} after {rounds} round(s)")
    return Subalgebra(n, np.asarray(rows).reshape(len(rows), n, n), label)


def projection_superoperator(alg: Subalgebra) -> np.ndarray:
    """E_tau as an n^2 x n^2 matrix: sum_k vec(B_k) vec(B_k)^*."""
    rows = alg.basis_rows
    return rows.T @ rows.conj()


def conditional_expectation_tau(alg: Subalgebra, X) -> np.ndarray:
    """E_tau(X) = sum_k <B_k, X>_HS B_k."""
    X = as_matrix(X, alg.ambient_dim)
    return alg.project(X)


def null_space(M: np.ndarray, tol: float) -> np.ndarray:
    """
    Orthonormal basis (as columns) of the right singular vectors with
    singular value <= tol * max(1, s_max). The cut is absolute for
    well-scaled systems so a numerically zero matrix has a full null space.
    """
    if M.shape[0] < M.shape[1]:
        M = np.vstack([M, np.zeros((M.shape[1] - M.shape[0], M.shape[1]), dtype=M.dtype)])
    _, s, Vh = svd(M, full_matrices=False)
    cut = tol * max(1.0, float(s[0]) if s.size else 0.0)
    rank = int(np.count_nonzero(s > cut))
    return Vh[rank:].conj().T


def _subalgebra_from_nullspace(n: int, columns: np.ndarray, label: str) -> Subalgebra:
    k = columns.shape[1]
    return Subalgebra(n, np.ascontiguousarray(columns.T).reshape(k, n, n), label)


def commutant(alg: Subalgebra) -> Subalgebra:
    """{Z : Z B_k = B_k Z for all k}, as the null space of the stacked commutators."""
    n = alg.ambient_dim
    eye = np.eye(n)
    # vec(Z B) = (1 kron B^T) vec(Z), vec(B Z) = (B kron 1) vec(Z)
    blocks = [np.kron(eye, B.T) - np.kron(B, eye) for B in alg.basis]
    system = np.vstack(blocks) if blocks else np.zeros((1, n * n))
    columns = null_space(system, get_tolerances().span_tol)
    return _subalgebra_from_nullspace(n, columns, f"commutant({alg.label})")


def intersect_algebras(a: Subalgebra, b: Subalgebra, label: str = "") -> Subalgebra:
    """
    span(a) ∩ span(b): coefficient vectors c over a's basis with
    (1 - P_b) sum_k c_k A_k = 0.
    """
    if a.ambient_dim != b.ambient_dim:
        raise DimensionMismatch("Algebras live in different matrix sizes")
    n = a.ambient_dim
    A = a.basis_rows.T  # n^2 x dim(a)
    complement = A - b.basis_rows.T @ (b.basis_rows.conj() @ A)
    coeffs = null_space(complement, get_tolerances().span_tol)
    if coeffs.shape[1] == 0:
        return Subalgebra(n, np.zeros((0, n, n), dtype=complex), label)
    # A has orthonormal columns; QR only cleans up roundoff
    q, _ = np.linalg.qr(A @ coeffs)
    return _subalgebra_from_nullspace(n, q, label or f"{a.label}∩{b.label}")


def center(alg: Subalgebra) -> Subalgebra:
    return intersect_algebras(alg, commutant(alg), f"center({alg.label})")


class AlgebraDiagnostics(NamedTuple):
    orthonormality: float
    unital: float
    adjoint_closure: float
    product_closure: float

    @property
    def max_residual(self) -> float:
        return max(self)

    def is_valid(self, tol: Optional[float] = None) -> bool:
        tol = get_tolerances().span_tol if tol is None else tol
        return self.max_residual <= tol


def verify_algebra(alg: Subalgebra) -> AlgebraDiagnostics:
    """Measured violation of each Subalgebra invariant."""
    n = alg.ambient_dim
    rows = alg.basis_rows
    gram = rows.conj() @ rows.T
    orthonormality = float(np.max(np.abs(gram - np.eye(alg.dim)))) if alg.dim else 0.0
    unital = alg.span_residual(np.eye(n) / np.sqrt(n)) if alg.dim else 1.0

    adjoint = 0.0
    product = 0.0
    for B in alg.basis:
        adjoint = max(adjoint, alg.span_residual(dagger(B)))
        for C in alg.basis:
            product = max(product, alg.span_residual(B @ C))
    return AlgebraDiagnostics(orthonormality, unital, adjoint, product)


# Factor decomposition

@dataclass(frozen=True, eq=False)
class FactorBlock:
    """
    One summand P_j H = H_left (x) H_right. `isometry` is n x (d_left*d_right)
    with column i*d_right + a holding the basis vector e_i (x) e_a.
    """
    projection: np.ndarray
    isometry: np.ndarray
    d_left: int
    d_right: int

    def compress(self, X: np.ndarray) -> np.ndarray:
        """V* X V on C^d_left (x) C^d_right."""
        return dagger(self.isometry) @ X @ self.isometry

    def expand(self, Y: np.ndarray) -> np.ndarray:
        """V Y V*, back in M_n."""
        return self.isometry @ Y @ dagger(self.isometry)


@dataclass(frozen=True, eq=False)
class FactorDecomposition:
    blocks: Tuple[FactorBlock, ...]

    @property
    def profile(self) -> List[Tuple[int, int]]:
        return [(b.d_left, b.d_right) for b in self.blocks]


def right_factor_residual(M: np.ndarray, d_left: int, d_right: int) -> Tuple[np.ndarray, float]:
    """Best 1 (x) A approximation of M and the HS distance to it."""
    A = partial_trace(M, (d_left, d_right), "first") / d_left
    return A, hs_norm(M - np.kron(np.eye(d_left), A))


def _group_eigenvalues(values: np.ndarray, rel_tol: float) -> List[np.ndarray]:
    """Split ascending eigenvalues where consecutive gaps exceed rel_tol * diameter."""
    diameter = float(values[-1] - values[0])
    if diameter <= _TINY:
        return [np.arange(values.size)]
    cuts = np.nonzero(np.diff(values) > rel_tol * diameter)[0] + 1
    return np.split(np.arange(values.size), cuts)


def _block_isometry(alg: Subalgebra, VP: np.ndarray, rng: np.random.Generator) -> Tuple[np.ndarray, int, int]:
    """Matrix-unit construction of the tensor isometry inside one central block."""
    tol = get_tolerances()
    m = VP.shape[1]
    restricted = span_algebra(m, [dagger(VP) @ B @ VP for B in alg.basis])
    d_right = int(round(np.sqrt(restricted.dim)))
    if d_right * d_right != restricted.dim or m % d_right:
        raise StructureInconsistency(
            f"Block of size {m} carries a {restricted.dim}-dimensional algebra, not a factor")
    d_left = m // d_right
    if d_right == 1:
        return VP, d_left, d_right

    H = restricted.random_hermitian_element(rng)
    w, F = np.linalg.eigh((H + dagger(H)) / 2)
    groups = _group_eigenvalues(w, tol.grouping_rel)
    if len(groups) != d_right or any(g.size != d_left for g in groups):
        raise DegenerateRandomElement(
            f"Block element split into {[g.size for g in groups]}, expected {d_right} x {d_left}")
    frames = [F[:, g] for g in groups]

    X = restricted.random_element(rng)
    columns = np.empty((m, m), dtype=complex)
    for a, Fa in enumerate(frames):
        if a == 0:
            Ua = np.eye(d_left)
        else:
            T = dagger(Fa) @ X @ frames[0]
            Ua, P = polar(T)
            s = np.linalg.eigvalsh((P + dagger(P)) / 2)
            if s[-1] <= _TINY or (s[-1] - s[0]) > tol.structure_tol * s[-1]:
                raise DegenerateRandomElement("Connecting element is not a multiple of a unitary")
        block = Fa @ Ua
        for i in range(d_left):
            columns[:, i * d_right + a] = block[:, i]
    return VP @ columns, d_left, d_right


def verify_decomposition(alg: Subalgebra, decomp: FactorDecomposition) -> float:
    """Largest residual over the FactorDecomposition invariants."""
    n = alg.ambient_dim
    total = np.zeros((n, n), dtype=complex)
    worst = 0.0
    for i, blk in enumerate(decomp.blocks):
        V = blk.isometry
        m = blk.d_left * blk.d_right
        worst = max(worst, hs_norm(dagger(V) @ V - np.eye(m)))
        worst = max(worst, hs_norm(V @ dagger(V) - blk.projection))
        for other in decomp.blocks[i + 1:]:
            worst = max(worst, hs_norm(blk.projection @ other.projection))
        total += blk.projection
        for B in alg.basis:
            _, residual = right_factor_residual(blk.compress(B), blk.d_left, blk.d_right)
            worst = max(worst, residual)
    return max(worst, hs_norm(total - np.eye(n)))


def factor_decomposition(alg: Subalgebra, rng: np.random.Generator) -> FactorDecomposition:
    """
    Minimal central projections from a random self-adjoint central element,
    then a tensor isometry per block from matrix units. Retries with fresh
    random draws when an element turns out degenerate.
    """
    tol = get_tolerances()
    Z = center(alg)
    last_error: Optional[Exception] = None
    for attempt in range(1, tol.max_random_attempts + 1):
        try:
            H = Z.random_hermitian_element(rng)
            w, V = np.linalg.eigh((H + dagger(H)) / 2)
            groups = _group_eigenvalues(w, tol.grouping_rel)
            if len(groups) != Z.dim:
                raise DegenerateRandomElement(
                    f"Central element has {len(groups)} eigenvalue groups, center has dimension {Z.dim}")
            blocks = []
            for g in groups:
                VP = V[:, g]
                iso, d_left, d_right = _block_isometry(alg, VP, rng)
                blocks.append(FactorBlock(VP @ dagger(VP), iso, d_left, d_right))
            decomp = FactorDecomposition(tuple(blocks))
            residual = verify_decomposition(alg, decomp)
            if residual > tol.structure_tol:
                raise DegenerateRandomElement(f"Decomposition residual {residual:.3e}")
            logging.debug(f"factor_decomposition: profile {decomp.profile} (attempt {attempt})")
            return decomp
        except DegenerateRandomElement as e:
            logging.warning(f"factor_decomposition attempt {attempt} failed: {e}")
            last_error = e
    raise DegenerateRandomElement(
        f"No usable random element after {tol.max_random_attempts} attempts: {last_error}")


# Builders

def full_algebra(n: int) -> Subalgebra:
    return Subalgebra(n, np.eye(n * n, dtype=complex).reshape(n * n, n, n), "full")


def scalar_algebra(n: int) -> Subalgebra:
    return Subalgebra(n, (np.eye(n, dtype=complex) / np.sqrt(n))[None], "scalar")


def diagonal_algebra(n: int) -> Subalgebra:
    return Subalgebra(n, np.array([matrix_unit(n, i, i) for i in range(n)]), "diagonal")


def tensor_factor_algebra(d1: int, d2: int, which: str = "second") -> Subalgebra:
    """1 (x) M_d2 (which='second') or M_d1 (x) 1 (which='first') inside M_{d1*d2}."""
    if which == "second":
        basis = [tensor_product(np.eye(d1), matrix_unit(d2, a, b)) / np.sqrt(d1)
                 for a in range(d2) for b in range(d2)]
    elif which == "first":
        basis = [tensor_product(matrix_unit(d1, a, b), np.eye(d2)) / np.sqrt(d2)
                 for a in range(d1) for b in range(d1)]
    else:
        raise ValidationError(f"which must be 'first' or 'second', got {which!r}")
    return Subalgebra(d1 * d2, np.array(basis), f"tensor_factor({d1},{d2},{which})")


def partition_algebra(partition: Sequence[Sequence[int]], n: int) -> Subalgebra:
    """Diagonal matrices constant on each cell of the partition."""
    basis = []
    for cell in partition:
        P = np.zeros((n, n), dtype=complex)
        idx = list(cell)
        P[idx, idx] = 1.0
        basis.append(P / np.sqrt(len(idx)))
    return Subalgebra(n, np.array(basis), "partition")


def block_algebra(blocks: Sequence[Tuple[int, int]]) -> Subalgebra:
    """Direct sum of 1_m (x) M_k over the (m, k) pairs, laid out consecutively."""
    n = sum(m * k for m, k in blocks)
    basis = []
    offset = 0
    for m, k in blocks:
        size = m * k
        for a in range(k):
            for b in range(k):
                B = np.zeros((n, n), dtype=complex)
                B[offset:offset + size, offset:offset + size] = np.kron(np.eye(m), matrix_unit(k, a, b)) / np.sqrt(m)
                basis.append(B)
        offset += size
    return Subalgebra(n, np.array(basis), f"blocks{list(blocks)}")


def conjugate_algebra(alg: Subalgebra, W: np.ndarray) -> Subalgebra:
    """W alg W* for a unitary W."""
    basis = np.array([W @ B @ dagger(W) for B in alg.basis])
    return Subalgebra(alg.ambient_dim, basis, f"conj({alg.label})")


def random_block_structure(n: int, rng: np.random.Generator) -> List[Tuple[int, int]]:
    blocks = []
    remaining = n
    while remaining > 0:
        k = int(rng.integers(1, remaining + 1))
        m = int(rng.integers(1, remaining // k + 1))
        blocks.append((m, k))
        remaining -= m * k
    return blocks


def random_generated_algebra(n: int, rng: np.random.Generator) -> Subalgebra:
    """
    Algebra generated by two random elements of a Haar-rotated block algebra
    with a random block structure (never the trivial span{1} when n > 1).
    """
    tol = get_tolerances()
    blocks = random_block_structure(n, rng)
    for _ in range(tol.max_random_attempts):
        if n == 1 or blocks != [(n, 1)]:
            break
        blocks = random_block_structure(n, rng)
    template = conjugate_algebra(block_algebra(blocks), random_unitary(n, rng))
    generators = [template.random_element(rng) for _ in range(2)]
    alg = close_generators(n, generators, label="random_generated")
    if alg.dim != template.dim:
        logging.warning(
            f"Random generators closed to dimension {alg.dim}, block template has {template.dim}")
    return alg


def unitary_average_expectation(unitaries: Sequence[np.ndarray], X: np.ndarray) -> np.ndarray:
    """(1/|G|) sum_U U X U* over a finite group of unitaries."""
    return sum(U @ X @ dagger(U) for U in unitaries) / len(unitaries)
