import cmath
import math

import numpy as np
import pytest

from app.errors import ChainError
from app.schema.potential_schema import Potential
from app.services.chain_service import (
    ChainService,
    correlation_decay_rate,
    gaussian_chain_moment,
    gaussian_chain_rate,
)
from app.services.contour_service import rotation_angle
from app.services.observables import get_observable


@pytest.fixture
def chain(spectral) -> ChainService:
    return ChainService(spectral, resolution_tol=1e-10)


@pytest.fixture
def gaussian_model(chain):
    """V(x) = x²，W = 2"""
    return chain.build_model(Potential(kind="quadratic", curvature=2.0), 2.0)


@pytest.fixture
def log_model(chain):
    return chain.build_model(Potential(kind="rotated-log", a=2.0, b=1.0), 4.0)


def test_build_model_solves_rotation(chain):
    base = Potential(kind="rotated-log", a=2.0, b=1 + 0.5j)
    model = chain.build_model(base, 2.0, count=64)
    assert model.zeta_angle == pytest.approx(rotation_angle(base.second_derivative_at_zero))
    assert model.grid.count == 64
    assert model.boundary.shape == (64,)


def test_finite_chain_matches_gaussian_moment(chain, gaussian_model):
    value = chain.finite_chain_mean(gaussian_model, get_observable("x2"), 2, 2)
    assert value.real == pytest.approx(gaussian_chain_moment(2.0, 2.0, 2, 2), rel=1e-8)
    assert abs(value.imag) < 1e-12


def test_single_site_chain(chain, gaussian_model):
    # 单格点时权重为 exp(-x²)
    value = chain.finite_chain_mean(gaussian_model, get_observable("x2"), 0, 0)
    assert value.real == pytest.approx(0.5, rel=1e-8)


def test_negative_chain_length(chain, gaussian_model):
    with pytest.raises(ValueError):
        chain.finite_chain_mean(gaussian_model, get_observable("x"), -1, 2)


@pytest.mark.parametrize("M, N", [(0, 0), (1, 0), (1, 1), (0, 2)])
def test_brute_force_matches_transfer_matrix(chain, M, N):
    model = chain.build_model(Potential(kind="rotated-log", a=2.0, b=1 + 0.5j), 2.0, count=64)
    x2 = get_observable("x2")
    expected = chain.finite_chain_mean(model, x2, M, N)
    assert chain.brute_force_tensor_mean(model, x2, M, N) == pytest.approx(expected, rel=1e-10)


def test_brute_force_limits(chain, gaussian_model):
    with pytest.raises(ValueError):
        chain.brute_force_tensor_mean(gaussian_model, get_observable("x"), 2, 1)
    # 自动分辨率给出的网格超过暴力求和上限
    assert gaussian_model.grid.count > 200
    with pytest.raises(ValueError):
        chain.brute_force_tensor_mean(gaussian_model, get_observable("x"), 1, 1)


def test_long_chain_converges_to_eigen_limit(chain, log_model):
    x2 = get_observable("x2")
    limit = chain.mean_observable(log_model, x2)
    assert chain.finite_chain_mean(log_model, x2, 40, 40) == pytest.approx(limit, rel=1e-6)


def test_periodic_chain_converges_to_eigen_limit(chain, log_model):
    x2 = get_observable("x2")
    limit = chain.mean_observable(log_model, x2)
    assert chain.periodic_mean(log_model, x2, 60) == pytest.approx(limit, rel=1e-6)


def test_periodic_length_must_be_positive(chain, gaussian_model):
    with pytest.raises(ValueError):
        chain.periodic_mean(gaussian_model, get_observable("x"), 0)


def test_gaussian_correlation_rate(chain, gaussian_model):
    x = get_observable("x")
    series = chain.correlation_series(gaussian_model, x, x, 30)
    assert series.separations == list(range(31))
    assert series.rate == pytest.approx(gaussian_chain_rate(2.0, 2.0), rel=1e-6)
    assert series.spectral_ratio == pytest.approx(gaussian_chain_rate(2.0, 2.0), rel=1e-8)


def test_two_point_function_at_zero_separation(chain, gaussian_model):
    x = get_observable("x")
    series = chain.correlation_series(gaussian_model, x, x, 10)
    assert chain.two_point_connected(gaussian_model, x, x, 0) == pytest.approx(series.values[0])
    assert chain.two_point_connected(gaussian_model, x, x, 7) == pytest.approx(series.values[7])
    with pytest.raises(ValueError):
        chain.two_point_connected(gaussian_model, x, x, -1)


def test_correlation_rate_follows_spectral_gap(chain):
    model = chain.build_model(Potential(kind="rotated-log", a=2.0, b=1.0), 16.0)
    x = get_observable("x")
    series = chain.correlation_series(model, x, x, 40)
    assert abs(series.rate - series.spectral_ratio) < 5e-3
    assert abs(series.spectral_ratio - (1 - math.sqrt(2) / 16)) < 0.01
    assert series.predicted_gap == pytest.approx(math.sqrt(2) / 16)


def test_correlation_rate_approaches_gap_as_coupling_grows(chain):
    base = Potential(kind="rotated-log", a=2.0, b=1.0)
    x = get_observable("x")
    deviations = []
    for W in (16.0, 32.0):
        series = chain.correlation_series(chain.build_model(base, W), x, x, 40)
        gap = series.predicted_gap
        deviations.append(abs((1 - series.rate) - gap) / gap)
    assert max(deviations) <= 0.1
    assert deviations[1] < deviations[0]


def test_decay_rate_of_geometric_sequence():
    values = [0.5 ** n for n in range(20)]
    assert correlation_decay_rate(values) == pytest.approx(0.5)


def test_decay_rate_needs_five_points():
    with pytest.raises(ChainError):
        correlation_decay_rate([0.5 ** n for n in range(7)])


def test_decay_rate_ignores_vanishing_values():
    values = [0.5 ** n for n in range(10)] + [0.0] * 5
    assert correlation_decay_rate(values) == pytest.approx(0.5)


def test_gaussian_chain_helpers():
    assert gaussian_chain_moment(2.0, 1.0, 0, 0) == pytest.approx(0.5)
    r = gaussian_chain_rate(2.0, 2.0)
    # r 满足 2W²r² − (v2 + 4W²)r + 2W² = 0
    assert 8 * r ** 2 - 18 * r + 8 == pytest.approx(0.0, abs=1e-12)


def test_contour_invariance_quadratic(chain):
    base = Potential(kind="quadratic", curvature=2 * (1 + 0.5j))
    rotated = chain.build_model(base, 2.0, half_length=8.0)
    unrotated = chain.build_model(base, 2.0, zeta_angle=0.0, half_length=8.0)
    assert rotated.zeta_angle != 0.0
    x2 = get_observable("x2")
    assert chain.finite_chain_mean(rotated, x2, 1, 1) == pytest.approx(
        chain.finite_chain_mean(unrotated, x2, 1, 1), abs=1e-8
    )


@pytest.mark.parametrize("name", ["log-moment", "x2"])
def test_contour_invariance_rotated_log(chain, name):
    base = Potential(kind="rotated-log", a=6.0, b=cmath.exp(0.3j))
    rotated = chain.build_model(base, 2.0, half_length=12.0)
    unrotated = chain.build_model(base, 2.0, zeta_angle=0.0, half_length=12.0)
    observable = get_observable(name)
    assert chain.finite_chain_mean(rotated, observable, 1, 1) == pytest.approx(
        chain.finite_chain_mean(unrotated, observable, 1, 1), abs=1e-6
    )


def test_quasi_zero_pairing_raises(chain, gaussian_model):
    pair = chain.eigenpair(gaussian_model)
    pair.bilinear_norm = 1e-9
    with pytest.raises(ChainError):
        chain.mean_observable(gaussian_model, get_observable("x"), pair)
