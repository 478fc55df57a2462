"""
Unit tests for the fixed-point algebra and the solutions of the Petz equation.
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

from algebra import block_algebra, diagonal_algebra, scalar_algebra, tensor_factor_algebra
from errors import BadWeights, DimensionMismatch, NotInAlgebra, NotInvariant
from petz_structure import (build_equality_state, build_structure, cesaro_check,
                            coarse_gap_equivalence, conditional_expectation_C,
                            dual_expectation_state, extract_equality_parameters,
                            fixed_point_algebra, fixed_point_equivalence, largest_invariant_check)
from recovery import RecoveryContext, petz_map
from rng import make_generator
from sample_test_data import block_instance, product_instance, qubit_example
from stability import dpi_gap
from states_entropy import DensityMatrix, maximally_mixed, random_density


@pytest.fixture
def rng():
    return make_generator(31)


def test_generic_rho_with_diagonal_algebra_has_trivial_fixed_points():
    rho, _, alg = qubit_example()
    ctx = RecoveryContext.build(rho, alg)
    C = fixed_point_algebra(ctx)
    assert C.dim == 1
    assert C.same_span(scalar_algebra(2))


def test_equality_forces_sigma_equal_rho_when_fixed_points_trivial(rng):
    rho, _, alg = qubit_example()
    fps = build_structure(RecoveryContext.build(rho, alg), rng)
    assert fps.profile == [(2, 1)]
    sigma = build_equality_state(fps, [maximally_mixed(1)], [1.0])
    assert np.allclose(sigma.matrix, rho.matrix, atol=1e-10)


def test_tracial_state_fixes_whole_subalgebra(rng):
    alg = block_algebra([(2, 1), (1, 2)])
    ctx = RecoveryContext.build(maximally_mixed(4), alg)
    C = fixed_point_algebra(ctx)
    assert C.same_span(alg, 1e-8)


def test_product_state_structure(rng):
    rho, _, alg, rho1, _, sigma2 = product_instance()
    fps = build_structure(RecoveryContext.build(rho, alg), rng)
    assert fps.C.dim == 4
    assert fps.profile == [(2, 2)]
    assert max(fps.residuals.values()) < 1e-8
    # gamma is rho1 up to the choice of basis on the left factor
    assert np.allclose(np.sort(np.linalg.eigvalsh(fps.gammas[0].matrix)),
                       np.sort(np.linalg.eigvalsh(rho1.matrix)), atol=1e-10)


def test_block_structure_and_equality_states(rng):
    rho, alg = block_instance()
    fps = build_structure(RecoveryContext.build(rho, alg), rng)
    assert fps.n_blocks == 3
    assert sorted(fps.profile) == [(1, 1)] * 3
    assert np.allclose(np.sort(fps.weights), [0.2, 0.3, 0.5])

    # every diagonal sigma solves the Petz equation for diagonal rho
    weights = np.array([0.1, 0.6, 0.3])
    sigma = build_equality_state(fps, [maximally_mixed(1)] * 3, weights)
    assert np.allclose(np.sort(np.real(np.diag(sigma.matrix))), np.sort(weights))
    assert abs(dpi_gap(rho, sigma, alg)) < 1e-12

    states, recovered = extract_equality_parameters(fps, sigma)
    assert np.allclose(recovered, weights)
    assert len(states) == 3


def test_equality_state_round_trip_on_product(rng):
    rho, _, alg, _, _, _ = product_instance()
    fps = build_structure(RecoveryContext.build(rho, alg), rng)
    s = random_density(2, seed=77)
    sigma = build_equality_state(fps, [s], [1.0])
    ctx = fps.ctx
    assert np.allclose(petz_map(ctx, ctx.expect(sigma.matrix)), sigma.matrix, atol=1e-10)
    states, weights = extract_equality_parameters(fps, sigma)
    assert weights == pytest.approx([1.0])
    assert np.allclose(states[0].matrix, s.matrix, atol=1e-10)


def test_equality_state_input_validation(rng):
    rho, alg = block_instance()
    fps = build_structure(RecoveryContext.build(rho, alg), rng)
    with pytest.raises(BadWeights):
        build_equality_state(fps, [maximally_mixed(1)] * 3, [0.5, 0.5, 0.5])
    with pytest.raises(BadWeights):
        build_equality_state(fps, [maximally_mixed(1)] * 3, [1.5, -0.5, 0.0])
    with pytest.raises(DimensionMismatch):
        build_equality_state(fps, [maximally_mixed(1)] * 2, [0.5, 0.5])
    with pytest.raises(DimensionMismatch):
        build_equality_state(fps, [maximally_mixed(2)] * 3, [0.2, 0.3, 0.5])


def test_expectation_onto_fixed_points_preserves_rho(rng):
    rho, _, alg, *_ = product_instance()
    fps = build_structure(RecoveryContext.build(rho, alg), rng)
    X = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    EX = conditional_expectation_C(fps, X)
    assert fps.C.contains(EX, 1e-8)
    assert np.trace(rho.matrix @ EX) == pytest.approx(np.trace(rho.matrix @ X), abs=1e-10)
    assert np.allclose(conditional_expectation_C(fps, EX), EX, atol=1e-10)
    assert np.allclose(dual_expectation_state(fps, rho).matrix, rho.matrix, atol=1e-10)


def test_cesaro_agrees_with_eigenspace(rng):
    rho, _, alg = qubit_example()
    ctx = RecoveryContext.build(rho, alg)
    C = fixed_point_algebra(ctx, cross_check=False)
    assert cesaro_check(ctx, C) < 1e-6


def test_fixed_point_equivalence(rng):
    rho, alg = block_instance()
    fps = build_structure(RecoveryContext.build(rho, alg), rng)
    fixed = fixed_point_equivalence(fps, DensityMatrix.from_matrix(np.diag([0.2, 0.2, 0.6]).astype(complex)))
    assert fixed.phi_residual < 1e-10
    assert fixed.dual_residual < 1e-10
    assert fixed.consistent()
    moved = fixed_point_equivalence(fps, random_density(3, seed=3))
    assert moved.phi_residual > 1e-6
    assert moved.dual_residual > 1e-6
    assert moved.consistent()


def test_coarse_gap_equivalence():
    rho, sigma, alg, *_ = product_instance()
    equal = coarse_gap_equivalence(rho, sigma, alg)
    assert equal.consistent()
    assert abs(equal.gap_N) < 1e-12 and abs(equal.gap_C) < 1e-12
    other = random_density(4, seed=5)
    unequal = coarse_gap_equivalence(rho, other, alg)
    assert unequal.gap_N > 1e-6 and unequal.gap_C > 1e-6
    assert unequal.consistent()


def test_largest_invariant_check():
    rho, alg = block_instance()
    ctx = RecoveryContext.build(rho, alg)
    assert largest_invariant_check(ctx, scalar_algebra(3))
    assert largest_invariant_check(ctx, diagonal_algebra(3))


def test_largest_invariant_check_rejects_bad_input():
    rho, _, alg = qubit_example()
    ctx = RecoveryContext.build(rho, alg)
    with pytest.raises(NotInAlgebra):
        largest_invariant_check(ctx, tensor_factor_algebra(1, 2))
    # span{1} is trivially invariant; the diagonal algebra is not invariant under this rho
    assert largest_invariant_check(ctx, scalar_algebra(2))
    with pytest.raises(NotInvariant):
        largest_invariant_check(ctx, diagonal_algebra(2))
