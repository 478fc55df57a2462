"""
Dense complex linear algebra kernel.

Conventions used everywhere in this package:
  * matrices are numpy complex128 arrays, row-major;
  * vec(X) = X.reshape(-1), so vec(A X B) = (A kron B^T) vec(X) and the
    Hilbert-Schmidt inner product <X, Y> = Tr[X^* Y] = vdot(vec X, vec Y);
  * tensor index (i1, i2) maps to i1 * d2 + i2 (numpy.kron order).
"""

import logging
from dataclasses import dataclass
from functools import reduce
from typing import Callable, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from config import get_tolerances
from errors import (ConvergenceFailure, DimensionMismatch, NotHermitian,
                    SingularInput, ValidationError)

_TINY = np.finfo(float).tiny


def as_matrix(X, dim: Optional[int] = None) -> np.ndarray:
    """Coerce to a square complex128 array, checking the dimension if given."""
    M = np.asarray(X, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
        raise DimensionMismatch(f"Expected a non-empty square matrix, got shape {M.shape}")
    if dim is not None and M.shape[0] != dim:
        raise DimensionMismatch(f"Expected a {dim}x{dim} matrix, got {M.shape[0]}x{M.shape[0]}")
    return M


def dagger(X: np.ndarray) -> np.ndarray:
    return X.conj().T


def op_norm(X: np.ndarray) -> float:
    return float(np.linalg.norm(X, 2))


def hs_norm(X: np.ndarray) -> float:
    return float(np.linalg.norm(X))


def trace_norm(X: np.ndarray) -> float:
    return float(np.sum(np.linalg.svd(X, compute_uv=False)))


def hs_inner(X: np.ndarray, Y: np.ndarray) -> complex:
    """<X, Y>_HS = Tr[X^* Y]."""
    return complex(np.vdot(X, Y))


class MatrixNorms(NamedTuple):
    op_norm: float
    hs_norm: float
    trace_norm: float


def norms(X) -> MatrixNorms:
    """Operator, Hilbert-Schmidt and trace norms from one SVD."""
    s = np.linalg.svd(as_matrix(X), compute_uv=False)
    return MatrixNorms(float(s[0]), float(np.sqrt(np.sum(s * s))), float(np.sum(s)))


def hermiticity_residual(X: np.ndarray) -> float:
    return float(np.max(np.abs(X - dagger(X))))


def check_hermitian(X, tol: Optional[float] = None) -> np.ndarray:
    """Return X as an array, raising NotHermitian past the relative tolerance."""
    M = as_matrix(X)
    if tol is None:
        tol = get_tolerances().hermiticity_rel
    scale = max(op_norm(M), _TINY)
    residual = hermiticity_residual(M)
    if residual > tol * scale:
        raise NotHermitian(f"Matrix is not Hermitian: max |M - M*| = {residual:.3e}")
    return M


def hermitize(X) -> Tuple[np.ndarray, float]:
    """Return ((X + X*)/2, ||X - X*||_op / 2)."""
    M = as_matrix(X)
    anti = M - dagger(M)
    return (M + dagger(M)) / 2, op_norm(anti) / 2


class SpectralFunction(NamedTuple):
    """A scalar function applied through the functional calculus."""
    name: str
    func: Callable[[np.ndarray], np.ndarray]
    singular_at_zero: bool = False
    nonnegative_domain: bool = False


LOG = SpectralFunction("log", np.log, singular_at_zero=True)
SQRT = SpectralFunction("sqrt", np.sqrt, nonnegative_domain=True)
INVERSE = SpectralFunction("inverse", lambda x: 1.0 / x, singular_at_zero=True)


def power(p: float) -> SpectralFunction:
    if p < 0:
        return negative_power(-p)
    return SpectralFunction(f"power({p})", lambda x: np.power(x, p), nonnegative_domain=True)


def negative_power(p: float) -> SpectralFunction:
    """x -> x^(-p) for p > 0."""
    return SpectralFunction(f"power({-p})", lambda x: np.power(x, -p), singular_at_zero=True)


def resolvent(t: float) -> SpectralFunction:
    return SpectralFunction(f"resolvent({t})", lambda x: 1.0 / (t + x))


def as_spectral_function(f: Union[SpectralFunction, Callable]) -> SpectralFunction:
    if isinstance(f, SpectralFunction):
        return f
    if callable(f):
        return SpectralFunction(getattr(f, "__name__", "custom"), f)
    raise ValidationError(f"Unsupported spectral function: {f!r}")


@dataclass(frozen=True, eq=False)
class EigenSystem:
    """Ascending eigenvalues and the unitary whose columns are eigenvectors."""
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    @property
    def max_eigenvalue(self) -> float:
        return float(self.eigenvalues[-1])

    @property
    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues[0])

    def reconstruct(self, values: Optional[np.ndarray] = None) -> np.ndarray:
        lam = self.eigenvalues if values is None else values
        V = self.eigenvectors
        return (V * lam) @ dagger(V)

    def spectral_values(self, f, pinv_threshold: Optional[float] = None) -> Tuple[np.ndarray, int]:
        """f applied to the eigenvalues under the pseudo-inverse rule."""
        spec = as_spectral_function(f)
        lam = self.eigenvalues
        if spec.singular_at_zero:
            if pinv_threshold is None:
                threshold = get_tolerances().pinv_rel * max(self.max_eigenvalue, 0.0)
            else:
                threshold = pinv_threshold
                if threshold == 0 and self.min_eigenvalue <= 0:
                    raise SingularInput(
                        f"{spec.name} needs a strictly positive spectrum, "
                        f"min eigenvalue {self.min_eigenvalue:.3e}")
            keep = lam > threshold
            values = np.zeros(lam.shape, dtype=float)
            values[keep] = spec.func(lam[keep])
            return values, int(np.count_nonzero(~keep))
        if spec.nonnegative_domain:
            lam = np.clip(lam, 0.0, None)
        return np.asarray(spec.func(lam)), 0

    def apply(self, f, pinv_threshold: Optional[float] = None,
              return_truncated: bool = False):
        values, truncated = self.spectral_values(f, pinv_threshold)
        out = self.reconstruct(values)
        if truncated:
            logging.debug(f"Pseudo-inverse rule truncated {truncated} eigenvalue(s)")
        if return_truncated:
            return out, truncated
        return out


def hermitian_eig(H, check: bool = True) -> EigenSystem:
    """
    Eigendecomposition of a Hermitian matrix (LAPACK heevd through numpy).

    Raises NotHermitian when `check` is set and H fails the hermiticity test,
    ConvergenceFailure when the solver fails or its residuals are out of
    contract.
    """
    M = check_hermitian(H) if check else as_matrix(H)
    M = (M + dagger(M)) / 2
    try:
        w, V = np.linalg.eigh(M)
    except np.linalg.LinAlgError as e:
        raise ConvergenceFailure(f"Hermitian eigensolver did not converge: {e}") from e

    tol = get_tolerances().eig_tol
    scale = max(float(np.max(np.abs(w))), _TINY)
    reconstruction = hs_norm((V * w) @ dagger(V) - M)
    unitarity = hs_norm(dagger(V) @ V - np.eye(M.shape[0]))
    if reconstruction > tol * scale or unitarity > tol:
        raise ConvergenceFailure(
            f"Eigendecomposition residuals out of contract: "
            f"reconstruction {reconstruction:.3e}, unitarity {unitarity:.3e}")
    return EigenSystem(w, V)


def matrix_function(H, f, pinv_threshold: Optional[float] = None,
                    return_truncated: bool = False):
    """
    V f(diag(lambda)) V* for Hermitian H (or a precomputed EigenSystem).

    For functions singular at zero, eigenvalues <= pinv_threshold (default
    pinv_rel * lambda_max) map to 0; an explicit threshold of 0 with a
    nonpositive eigenvalue raises SingularInput. With `return_truncated`
    the number of truncated eigenvalues is returned as well.
    """
    eig = H if isinstance(H, EigenSystem) else hermitian_eig(H)
    return eig.apply(f, pinv_threshold, return_truncated)


def tensor_product(*factors) -> np.ndarray:
    """Kronecker product, index (i1, i2) -> i1 * d2 + i2."""
    if not factors:
        raise DimensionMismatch("tensor_product needs at least one factor")
    return reduce(np.kron, [np.asarray(f, dtype=complex) for f in factors])


def partial_trace(X, dims: Tuple[int, int], which: str = "first") -> np.ndarray:
    """Tr_1 X (which='first') or Tr_2 X (which='second') on C^d1 (x) C^d2."""
    d1, d2 = int(dims[0]), int(dims[1])
    M = as_matrix(X)
    if d1 * d2 != M.shape[0]:
        raise DimensionMismatch(f"dims {d1}x{d2} do not match matrix dimension {M.shape[0]}")
    T = M.reshape(d1, d2, d1, d2)
    if which == "first":
        return np.einsum('ijik->jk', T)
    if which == "second":
        return np.einsum('ijkj->ik', T)
    raise ValidationError(f"which must be 'first' or 'second', got {which!r}")


def reduced_matrix(X, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """
    Partial trace over every factor not listed in `keep`, for any number of
    factors. Kept factors stay in their original order.

    The matrix is flattened to indices (a_0..a_{k-1}, b_0..b_{k-1}) with
    a_i, b_i the row/column index on factor i; traced factors contract a_i = b_i.
    """
    dims = [int(d) for d in dims]
    M = as_matrix(X)
    if int(np.prod(dims)) != M.shape[0]:
        raise DimensionMismatch(f"dims {dims} do not match matrix dimension {M.shape[0]}")
    keep = sorted(set(int(k) for k in keep))
    k = len(dims)
    letters = 'abcdefghijklmnopqrstuvwxyz'
    rows = list(letters[:k])
    cols = [letters[k + i] if i in keep else rows[i] for i in range(k)]
    out_rows = ''.join(rows[i] for i in keep)
    out_cols = ''.join(cols[i] for i in keep)
    expr = f"{''.join(rows)}{''.join(cols)}->{out_rows}{out_cols}"
    kept_dim = int(np.prod([dims[i] for i in keep])) if keep else 1
    result = np.einsum(expr, M.reshape(dims + dims))
    return np.asarray(result).reshape(kept_dim, kept_dim)


# Superoperators: n^2 x n^2 matrices acting on vec(X)

def vec(X: np.ndarray) -> np.ndarray:
    return np.asarray(X, dtype=complex).reshape(-1)


def unvec(v: np.ndarray, n: int) -> np.ndarray:
    return np.asarray(v).reshape(n, n)


def matrix_unit(n: int, i: int, j: int) -> np.ndarray:
    E = np.zeros((n, n), dtype=complex)
    E[i, j] = 1.0
    return E


def superoperator_matrix(linear_map: Callable[[np.ndarray], np.ndarray], n: int) -> np.ndarray:
    """Column k is vec(map(E_k)) for the k-th matrix unit in row-major order."""
    S = np.empty((n * n, n * n), dtype=complex)
    for k in range(n * n):
        S[:, k] = vec(linear_map(matrix_unit(n, k // n, k % n)))
    return S


def sandwich_superoperator(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Matrix of X -> A X B: vec(A X B) = (A kron B^T) vec(X)."""
    return np.kron(A, B.T)


def apply_superoperator(S: np.ndarray, X: np.ndarray) -> np.ndarray:
    n = X.shape[0]
    return unvec(S @ vec(X), n)


def hs_adjoint(S: np.ndarray) -> np.ndarray:
    return dagger(S)


def choi_matrix(linear_map, n: int) -> np.ndarray:
    """
    J = sum_ij E_ij (x) map(E_ij). Accepts a callable or the superoperator
    matrix of the map.
    """
    S = linear_map if isinstance(linear_map, np.ndarray) else superoperator_matrix(linear_map, n)
    # S[a*n+b, i*n+j] = map(E_ij)[a, b]  ->  J[i*n+a, j*n+b]
    return S.reshape(n, n, n, n).transpose(2, 0, 3, 1).reshape(n * n, n * n)


def min_hermitian_eigenvalue(M: np.ndarray) -> float:
    H = (M + dagger(M)) / 2
    return float(np.linalg.eigvalsh(H)[0])


# Random matrices

def random_ginibre(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    """Independent complex standard normal entries (E|z|^2 = 1)."""
    return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2)


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary: QR of a Ginibre matrix with the R-diagonal phases fixed."""
    Q, R = np.linalg.qr(random_ginibre(n, n, rng))
    d = np.diag(R)
    phases = d / np.where(np.abs(d) > 0, np.abs(d), 1.0)
    return Q * phases


def random_hermitian(n: int, rng: np.random.Generator) -> np.ndarray:
    G = random_ginibre(n, n, rng)
    return (G + dagger(G)) / 2


# Quadrature on the half line

class QuadratureResult(NamedTuple):
    value: Union[float, complex, np.ndarray]
    error_estimate: float


def _composite_gauss_legendre(func, panels: int, order: int):
    nodes, weights = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, 1.0, panels + 1)
    total = None
    for a, b in zip(edges[:-1], edges[1:]):
        half = (b - a) / 2
        mid = (a + b) / 2
        for x, w in zip(nodes, weights):
            u = mid + half * x
            t = u / (1.0 - u)
            jacobian = 1.0 / (1.0 - u) ** 2
            term = (w * half * jacobian) * func(t)
            total = term if total is None else total + term
    return total


def half_line_quadrature(func: Callable[[float], object], panels: Optional[int] = None,
                         order: Optional[int] = None) -> QuadratureResult:
    """
    Integral of func over (0, inf) via t = u / (1 - u) and composite
    Gauss-Legendre panels on u in (0, 1). Gauss nodes never touch u = 1.

    The error estimate is the change when the panel count is doubled.
    `func` may return scalars or arrays.
    """
    tol = get_tolerances()
    panels = panels or tol.quadrature_panels
    order = order or tol.quadrature_order
    coarse = _composite_gauss_legendre(func, panels, order)
    fine = _composite_gauss_legendre(func, 2 * panels, order)
    error = float(np.linalg.norm(np.atleast_1d(np.asarray(fine) - np.asarray(coarse))))
    return QuadratureResult(coarse, error)


def t_grid() -> np.ndarray:
    tol = get_tolerances()
    return np.logspace(np.log10(tol.t_grid_min), np.log10(tol.t_grid_max), tol.t_grid_points)
