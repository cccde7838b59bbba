import math

import numpy as np
import pytest

from app.errors import ConvergenceError
from app.schema.harmonic_schema import HarmonicParams
from app.schema.potential_schema import Potential
from app.services.discretize_service import TransferKernel, assemble_operator, build_grid
from app.services.harmonic_service import harmonic_eigenvalue, harmonic_kernel
from app.services.spectral_service import SpectralService


def test_top_pair_of_diagonal(spectral):
    M = np.diag([3.0, 1.0, 0.5]).astype(complex)
    pair = spectral.top_eigenpair(M)
    assert pair.eigenvalue == pytest.approx(3.0)
    np.testing.assert_allclose(np.abs(pair.vector), [1.0, 0.0, 0.0], atol=1e-8)
    assert pair.vector[0].real > 0
    assert pair.bilinear_norm == pytest.approx(1.0)


def test_rejects_non_square(spectral):
    with pytest.raises(ValueError):
        spectral.top_eigenpair(np.ones((2, 3)))


def test_rejects_non_finite(spectral):
    with pytest.raises(ValueError):
        spectral.top_eigenpair(np.array([[1.0, np.nan], [0.0, 1.0]]))


def test_power_iteration_matches_dense(spectral, rotated_params, harmonic_matrix):
    M, _ = harmonic_matrix(rotated_params)
    dense = np.linalg.eigvals(M)
    dense = dense[np.argsort(-np.abs(dense))]
    pairs = spectral.top_eigenvalues(M, 3)
    for pair, expected in zip(pairs, dense):
        assert pair.eigenvalue == pytest.approx(expected, rel=1e-8)
        assert pair.residual < 1e-9 * abs(pair.eigenvalue)


def test_same_seed_same_result(self_adjoint_params, harmonic_matrix):
    M, _ = harmonic_matrix(self_adjoint_params)
    first = SpectralService(seed=7).top_eigenpair(M)
    second = SpectralService(seed=7).top_eigenpair(M)
    assert first.eigenvalue == second.eigenvalue
    assert first.iterations == second.iterations


def test_convergence_error(self_adjoint_params, harmonic_matrix):
    M, _ = harmonic_matrix(self_adjoint_params)
    with pytest.raises(ConvergenceError) as excinfo:
        SpectralService(max_iters=5).top_eigenpair(M)
    assert excinfo.value.iterations == 5
    assert excinfo.value.exit_code == 2


def test_singular_values_of_diagonal(spectral):
    M = np.diag([2.0, -1.5, 0.5]).astype(complex)
    assert spectral.top_singular_values(M, 2) == pytest.approx([2.0, 1.5])


def test_singular_values_carry_partial_result():
    M = np.diag([1.0, 0.5, 0.499]).astype(complex)
    service = SpectralService(tol=1e-10, max_iters=60)
    with pytest.raises(ConvergenceError) as excinfo:
        service.singular_pairs(M, 2)
    assert excinfo.value.partial == pytest.approx([1.0])


@pytest.mark.parametrize("k", [0, 11])
def test_singular_count_range(spectral, k):
    with pytest.raises(ValueError):
        spectral.singular_pairs(np.eye(3), k)


def test_block_decomposition_of_rank_one(spectral):
    g = np.ones(5) / math.sqrt(5)
    mu = 0.7 + 0.2j
    M = mu * np.outer(g, g)
    report = spectral.block_decomposition(M, mu, g.astype(complex), W=1.0, c0=1.0)
    assert report.A == pytest.approx(1.0)
    assert report.normB < 1e-12
    assert report.normC < 1e-12
    assert report.normD < 1e-12
    assert report.gapD == pytest.approx(1.0)
    assert report.eigenvalue == pytest.approx(mu)
    assert report.u0_minus_galpha < 1e-12


def test_block_decomposition_requires_unit_vector(spectral):
    with pytest.raises(ValueError):
        spectral.block_decomposition(np.eye(2), 1.0, np.array([1.0, 1.0]))


def test_blocks_reconstruct_operator_on_random_vectors():
    rng = np.random.default_rng(11)
    n = 40
    M = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    M = M + M.T
    mu = 0.7 + 0.2j
    g = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    g /= np.linalg.norm(g)
    blocks = SpectralService.block_operators(M, mu, g)
    assert abs(np.vdot(g, blocks.B)) < 1e-12 * np.linalg.norm(blocks.B)
    assert abs(np.vdot(g, blocks.C)) < 1e-12 * np.linalg.norm(blocks.C)
    for _ in range(20):
        v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        error = np.linalg.norm(blocks.apply(v) - M @ v / mu)
        assert error <= 1e-12 * np.linalg.norm(v)


def test_semigroup_rate_is_second_eigenvalue_ratio(spectral, self_adjoint_params, harmonic_matrix):
    M, _ = harmonic_matrix(self_adjoint_params)
    u0 = spectral.top_eigenpair(M).vector
    report = spectral.semigroup_decay(M, u0, n_steps=200, trials=2)
    expected = abs(harmonic_eigenvalue(self_adjoint_params, 1) / harmonic_eigenvalue(self_adjoint_params, 0))
    assert report.asymptotic_rate == pytest.approx(expected, rel=1e-6)
    assert report.rate <= 1.0
    assert report.max_leakage < 1e-8


def test_semigroup_needs_enough_steps(spectral):
    with pytest.raises(ValueError):
        spectral.semigroup_decay(np.eye(2), np.array([1.0, 0.0]), n_steps=5, trials=1)


def test_overlap_integral_for_quadratic():
    kernel = TransferKernel(W=4.0, zeta_angle=0.0, potential=Potential(kind="quadratic", curvature=4.0))
    alpha = 4 * math.sqrt(2)
    report = SpectralService.overlap_integral(kernel, alpha, build_grid(6.0, 768))
    # (α + W² + 1)(x² + y²) − 2W²xy 的二维高斯积分
    expected = math.pi / math.sqrt((16 + alpha + 1) ** 2 - 256)
    assert report.value == pytest.approx(expected, rel=1e-10)
    assert report.precondition_ok


_SCHUR_KERNELS = {
    "self-adjoint": TransferKernel(W=4.0, zeta_angle=0.0, potential=Potential(kind="quadratic", curvature=4.0)),
    "rotated-harmonic": harmonic_kernel(HarmonicParams(W=8.0, a=1.0, b=math.tan(math.pi / 6), zeta_angle=-math.pi / 12)),
    "non-normal": harmonic_kernel(HarmonicParams(W=1.0, a=1.0, b=2.0)),
    "rotated-log": TransferKernel(
        W=3.0, zeta_angle=-0.1, potential=Potential(kind="rotated-log", b=1 + 0.5j, zeta_angle=-0.1)
    ),
    "custom": TransferKernel(W=2.0, zeta_angle=0.0, potential=Potential(kind="custom", coefficients=(1.0, 0.0, 0.1))),
}


@pytest.mark.parametrize("name", sorted(_SCHUR_KERNELS))
def test_schur_bound_dominates_top_singular_value(spectral, name):
    kernel = _SCHUR_KERNELS[name]
    grid = build_grid(4.0, 320)
    M = assemble_operator(kernel, grid).matrix
    s0 = spectral.top_singular_values(M, 1)[0]
    assert s0 <= SpectralService.schur_bound(kernel, grid) * (1 + 1e-12)


def test_harmonic_residual_vanishes_for_quadratic(self_adjoint_params):
    kernel = harmonic_kernel(self_adjoint_params)
    grid = build_grid(4.0, 160)
    M = assemble_operator(kernel, grid).matrix
    M_tilde = assemble_operator(kernel.harmonic_approximation(), grid).matrix
    g = np.ones(grid.count) / math.sqrt(grid.count)
    assert SpectralService.harmonic_residual(M, M_tilde, g) == 0.0
