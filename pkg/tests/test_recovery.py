"""
Unit tests for coarse graining, Petz recovery and the resolvent identities.
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

from algebra import conditional_expectation_tau, diagonal_algebra, random_generated_algebra
from errors import DimensionMismatch, NonFaithful, NotInAlgebra
from linalg_core import apply_superoperator, dagger, hs_norm
from recovery import (RecoveryContext, RecoveryPair, accardi_cecchini, embedding_U,
                      embedding_U_adjoint, gns_norm, intertwining_residual, kms_duality_residual,
                      petz_adjoint_residual, petz_map, petz_recovery, petz_residuals, phi_map,
                      psi_map, resolvent_identity, sqrt_integral_reconstruction, w_diagnostics,
                      w_vector)
from rng import make_generator
from sample_test_data import QUBIT_PETZ_RESIDUAL, product_instance, qubit_example
from states_entropy import DensityMatrix, maximally_mixed, quasi_entropy_t, random_density


@pytest.fixture
def generic():
    rng = make_generator(21)
    alg = random_generated_algebra(4, rng)
    rho = random_density(4, rng=rng, oversample=2)
    sigma = random_density(4, rng=rng, oversample=2)
    return rho, sigma, alg, rng


def test_context_rejects_non_faithful_rho():
    rho = DensityMatrix.from_matrix(np.diag([1.0, 0.0]))
    with pytest.raises(NonFaithful):
        RecoveryContext.build(rho, diagonal_algebra(2))


def test_context_rejects_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        RecoveryContext.build(maximally_mixed(3), diagonal_algebra(2))


def test_accardi_cecchini_is_unital_and_fixes_scalars(generic):
    rho, _, alg, _ = generic
    ctx = RecoveryContext.build(rho, alg)
    assert np.allclose(accardi_cecchini(ctx, np.eye(4)), np.eye(4), atol=1e-10)


def test_accardi_cecchini_lands_in_subalgebra(generic):
    rho, _, alg, rng = generic
    ctx = RecoveryContext.build(rho, alg)
    X = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    assert alg.contains(accardi_cecchini(ctx, X), 1e-9)


def test_petz_recovers_rho_from_rho_N(generic):
    rho, _, alg, _ = generic
    ctx = RecoveryContext.build(rho, alg)
    assert np.allclose(petz_recovery(ctx, ctx.rho_N).matrix, rho.matrix, atol=1e-10)


def test_petz_recovery_requires_gamma_in_subalgebra():
    rho, _, alg = qubit_example()
    ctx = RecoveryContext.build(rho, alg)
    with pytest.raises(NotInAlgebra):
        petz_recovery(ctx, rho)


def test_petz_recovery_of_qubit_example():
    rho, sigma, alg = qubit_example()
    ctx = RecoveryContext.build(rho, alg)
    recovered = petz_recovery(ctx, conditional_expectation_tau(alg, sigma.matrix))
    assert np.allclose(recovered.matrix, rho.matrix, atol=1e-12)
    residuals = petz_residuals(ctx, sigma)
    assert residuals.petz_trace_residual == pytest.approx(QUBIT_PETZ_RESIDUAL, abs=1e-12)


def test_duality_residuals_vanish(generic):
    rho, _, alg, rng = generic
    ctx = RecoveryContext.build(rho, alg)
    for _ in range(3):
        X = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        Y = alg.random_element(rng)
        assert kms_duality_residual(ctx, X, Y) < 1e-10
        assert petz_adjoint_residual(ctx, Y, X) < 1e-10


def test_embedding_is_isometric_on_subalgebra(generic):
    rho, _, alg, rng = generic
    ctx = RecoveryContext.build(rho, alg)
    X = alg.random_element(rng)
    Y = alg.random_element(rng)
    lhs = np.vdot(embedding_U(ctx, X), embedding_U(ctx, Y))
    assert abs(lhs - np.vdot(X, Y)) < 1e-10
    UY = embedding_U(ctx, Y)
    Z = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    adjoint_side = np.vdot(embedding_U_adjoint(ctx, Z), Y)
    assert abs(np.vdot(Z, UY) - adjoint_side) < 1e-10


def test_embedding_maps_root_of_rho_N_to_root_of_rho(generic):
    rho, sigma, alg, _ = generic
    pair = RecoveryPair.build(rho, sigma, alg)
    ctx = pair.ctx
    assert hs_norm(embedding_U(ctx, ctx.rho_N_sqrt) - ctx.rho_sqrt) < 1e-10
    # the embedded side of the resolvent identity is S_(t)(rho||sigma)
    for t in (0.05, 1.0, 20.0):
        record = resolvent_identity(pair, t)
        assert record.embedded_resolvent == pytest.approx(quasi_entropy_t(rho, sigma, t), rel=1e-9)


def test_intertwining(generic):
    rho, sigma, alg, rng = generic
    pair = RecoveryPair.build(rho, sigma, alg)
    X = alg.random_element(rng)
    Y = alg.random_element(rng)
    assert intertwining_residual(pair, X, Y) < 1e-9


def test_resolvent_identities_on_grid(generic):
    rho, sigma, alg, _ = generic
    pair = RecoveryPair.build(rho, sigma, alg)
    for record in w_diagnostics(pair):
        scale = max(1.0, abs(record.quasi_gap))
        assert record.gap_residual < 1e-9 * scale
        assert record.isometry_residual < 1e-9 * max(1.0, record.embedded_resolvent)
        assert record.positivity_margin > -1e-10 * max(1.0, record.w_energy)


def test_w_vanishes_in_equality_case():
    rho, sigma, alg, *_ = product_instance()
    ctx = RecoveryContext.build(rho, alg)
    for t in (0.01, 1.0, 100.0):
        assert hs_norm(w_vector(ctx, sigma, t)) < 1e-10


def test_resolvent_identity_single_point():
    rho, sigma, alg = qubit_example()
    record = resolvent_identity(RecoveryPair.build(rho, sigma, alg), 1.0)
    assert record.t == 1.0
    assert record.quasi_gap == pytest.approx(record.w_energy, abs=1e-12)


def test_sqrt_integral_reconstruction(generic):
    rho, sigma, alg, _ = generic
    recon = sqrt_integral_reconstruction(RecoveryPair.build(rho, sigma, alg))
    assert recon.residual < 1e-6
    assert recon.error_estimate < 1e-6


def test_phi_and_psi_superoperators(generic):
    rho, _, alg, rng = generic
    ctx = RecoveryContext.build(rho, alg)
    X = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    assert np.allclose(apply_superoperator(psi_map(ctx), X), accardi_cecchini(ctx, X), atol=1e-10)
    expected_phi = petz_map(ctx, alg.project(X))
    assert np.allclose(apply_superoperator(phi_map(ctx), X), expected_phi, atol=1e-10)
    # Phi is the HS adjoint of Psi
    assert np.allclose(dagger(phi_map(ctx)), psi_map(ctx), atol=1e-10)


def test_tensor_factor_coarse_graining_is_partial_trace():
    rho, _, alg, _, rho2, _ = product_instance()
    ctx = RecoveryContext.build(rho, alg)
    assert np.allclose(ctx.rho_N.matrix, np.kron(np.eye(2) / 2, rho2.matrix), atol=1e-12)
    Y = np.kron(np.eye(2), np.array([[1.0, 2.0], [2.0, -1.0]]))
    assert np.allclose(accardi_cecchini(ctx, Y), Y, atol=1e-10)


def test_gns_norm():
    rho, _, _ = qubit_example()
    assert gns_norm(rho, np.eye(2)) == pytest.approx(1.0)
    assert gns_norm(rho, np.zeros((2, 2))) == 0.0
