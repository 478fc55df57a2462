"""
Unit tests for the dense linear algebra kernel.
"""

import sys
import os

# Add parent directory to path to import core modules
parent_dir = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, parent_dir)

# Use test configuration (console logging only, no file requirement)
sys.path.insert(0, os.path.dirname(__file__))
import config_test  # Import test config first to set up logging

import numpy as np
import pytest
from scipy.linalg import logm, sqrtm

from errors import DimensionMismatch, NotHermitian, SingularInput
from linalg_core import (INVERSE, LOG, SQRT, choi_matrix, dagger, half_line_quadrature,
                         hermitian_eig, hermitize, hs_adjoint, hs_inner, matrix_function,
                         negative_power, norms, partial_trace, random_hermitian, random_unitary,
                         reduced_matrix, sandwich_superoperator, superoperator_matrix,
                         t_grid, tensor_product, unvec, vec)
from rng import make_generator


@pytest.fixture
def rng():
    return make_generator(11)


def _random_pd(n, rng):
    G = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return G @ dagger(G) + 0.1 * np.eye(n)


def test_eigendecomposition_reconstructs(rng):
    H = random_hermitian(5, rng)
    eig = hermitian_eig(H)
    assert np.allclose(eig.reconstruct(), H, atol=1e-12)
    assert np.all(np.diff(eig.eigenvalues) >= 0)


def test_non_hermitian_input_rejected():
    with pytest.raises(NotHermitian):
        hermitian_eig(np.array([[1.0, 1.0], [0.0, 1.0]]))


def test_non_square_input_rejected():
    with pytest.raises(DimensionMismatch):
        hermitian_eig(np.zeros((2, 3)))


def test_matrix_functions_match_scipy(rng):
    A = _random_pd(4, rng)
    assert np.allclose(matrix_function(A, SQRT), sqrtm(A), atol=1e-10)
    assert np.allclose(matrix_function(A, LOG), logm(A), atol=1e-10)
    assert np.allclose(matrix_function(A, INVERSE) @ A, np.eye(4), atol=1e-10)


def test_pseudo_inverse_rule_on_singular_input():
    P = np.diag([1.0, 0.0]).astype(complex)
    out, truncated = matrix_function(P, negative_power(0.5), return_truncated=True)
    assert truncated == 1
    assert np.allclose(out, P)


def test_zero_threshold_with_singular_input_raises():
    with pytest.raises(SingularInput):
        matrix_function(np.diag([1.0, 0.0]), INVERSE, pinv_threshold=0.0)


def test_hermitize_reports_asymmetry():
    M = np.array([[1.0, 2.0], [0.0, 1.0]], dtype=complex)
    H, asym = hermitize(M)
    assert np.allclose(H, dagger(H))
    assert asym == pytest.approx(1.0)


def test_norms_of_diagonal_matrix():
    result = norms(np.diag([3.0, -4.0]))
    assert result.op_norm == pytest.approx(4.0)
    assert result.hs_norm == pytest.approx(5.0)
    assert result.trace_norm == pytest.approx(7.0)


def test_partial_traces_of_product(rng):
    A, B = _random_pd(2, rng), _random_pd(3, rng)
    AB = tensor_product(A, B)
    assert np.allclose(partial_trace(AB, (2, 3), "first"), np.trace(A) * B)
    assert np.allclose(partial_trace(AB, (2, 3), "second"), np.trace(B) * A)


def test_reduced_matrix_matches_pairwise_partial_traces(rng):
    A, B, C = _random_pd(2, rng), _random_pd(3, rng), _random_pd(2, rng)
    ABC = tensor_product(A, B, C)
    assert np.allclose(reduced_matrix(ABC, (2, 3, 2), (0, 2)), np.trace(B) * np.kron(A, C))
    assert np.allclose(reduced_matrix(ABC, (2, 3, 2), (1,)), np.trace(A) * np.trace(C) * B)
    with pytest.raises(DimensionMismatch):
        reduced_matrix(ABC, (2, 2, 2), (0,))


def test_vec_convention_for_sandwich(rng):
    A, B, X = (rng.standard_normal((3, 3)) for _ in range(3))
    S = sandwich_superoperator(A, B)
    assert np.allclose(unvec(S @ vec(X), 3), A @ X @ B)


def test_superoperator_matrix_and_adjoint(rng):
    A = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    S = superoperator_matrix(lambda X: A @ X @ dagger(A), 3)
    X = rng.standard_normal((3, 3))
    Y = rng.standard_normal((3, 3))
    lhs = hs_inner(unvec(S @ vec(X), 3), Y)
    rhs = hs_inner(X, unvec(hs_adjoint(S) @ vec(Y), 3))
    assert abs(lhs - rhs) < 1e-10


def test_choi_of_identity_map_is_unnormalized_bell_projector():
    J = choi_matrix(lambda X: X, 2)
    phi = np.array([1.0, 0.0, 0.0, 1.0])
    assert np.allclose(J, np.outer(phi, phi))


def test_choi_of_transpose_is_swap():
    J = choi_matrix(lambda X: X.T, 2)
    assert np.min(np.linalg.eigvalsh(J)) == pytest.approx(-1.0)


def test_random_unitary_is_unitary(rng):
    U = random_unitary(4, rng)
    assert np.allclose(dagger(U) @ U, np.eye(4), atol=1e-12)


def test_half_line_quadrature():
    result = half_line_quadrature(lambda t: 1.0 / (1.0 + t) ** 2)
    assert result.value == pytest.approx(1.0, abs=1e-10)
    assert result.error_estimate < 1e-8


def test_t_grid_is_logarithmic():
    ts = t_grid()
    assert ts[0] == pytest.approx(1e-3)
    assert ts[-1] == pytest.approx(1e3)
    assert len(ts) == 25
    assert np.allclose(np.diff(np.log(ts)), np.log(ts[1] / ts[0]))
