import asyncio
import math

import numpy as np
import pytest

from app.errors import ContourError
from app.schema.potential_schema import Potential
from app.schema.sweep_schema import SweepResult, SweepRow
from app.services.asymptotics_service import AsymptoticsService, fit_power_law
from app.services.contour_service import rotation_angle


@pytest.fixture
def asymptotics(spectral) -> AsymptoticsService:
    return AsymptoticsService(spectral, resolution_tol=1e-10, threads=2)


def test_fit_power_law_exact():
    fit = fit_power_law([(W, 3.0 * W ** -2) for W in (2.0, 4.0, 8.0, 16.0)])
    assert fit.slope == pytest.approx(-2.0)
    assert fit.intercept == pytest.approx(math.log(3.0))
    assert fit.r2 == pytest.approx(1.0)
    assert fit.points == 4


def test_fit_power_law_with_multiplicative_noise():
    rng = np.random.default_rng(5)
    W_values = [2.0 ** k for k in range(1, 9)]
    points = [(W, 3.0 * W ** -1.5 * (1 + 0.01 * rng.standard_normal())) for W in W_values]
    fit = fit_power_law(points)
    assert fit.slope == pytest.approx(-1.5, abs=0.05)
    assert fit.r2 > 0.999


def test_fit_power_law_needs_three_points():
    with pytest.raises(ValueError):
        fit_power_law([(1.0, 1.0), (2.0, 0.5)])


def test_fit_power_law_rejects_non_positive():
    with pytest.raises(ValueError):
        fit_power_law([(1.0, 1.0), (2.0, 0.0), (4.0, 0.25)])


def test_long_table_marks_failures():
    result = SweepResult(
        experiment="main-proposition",
        W_values=[1.0, 2.0],
        rows=[
            SweepRow(W=1.0, metrics={"normB": 0.5, "normC": 0.25}),
            SweepRow(W=2.0, failed=True, error="boom"),
        ],
        c0=1.0,
    )
    records = result.to_rows()
    assert [r["metric"] for r in records] == ["normB", "normC", "error"]
    assert records[-1]["flag"] == "failed"
    assert result.metric("normB") == [0.5, None]


@pytest.mark.parametrize("W_list", [[8.0, 16.0, 32.0], [8.0, 32.0, 16.0, 64.0]])
def test_w_list_validation(asymptotics, W_list):
    with pytest.raises(ValueError):
        asyncio.run(asymptotics.sweep_main_proposition(Potential(kind="quadratic", curvature=4.0), 0.0, W_list))


def test_u2_violation_stops_the_sweep(asymptotics):
    with pytest.raises(ContourError):
        asyncio.run(asymptotics.sweep_main_proposition(
            Potential(kind="quadratic", curvature=2j), 0.0, [1.0, 2.0, 3.0, 4.0]
        ))


def test_singular_ratio_requires_normal_case(asymptotics):
    with pytest.raises(ValueError):
        asyncio.run(asymptotics.sweep_singular_ratio(0.0, 1.0, 1.0, [8.0, 16.0, 32.0, 64.0], 2))


def test_single_row_metrics(asymptotics):
    row = asymptotics.main_proposition_row(Potential(kind="quadratic", curvature=4.0), 0.0, 8.0)
    assert not row.failed
    assert row.grid_N % 8 == 0
    assert row.metrics["harmonic_residual_over_mu"] == 0.0
    assert 0 < row.metrics["gapD"] < 1


@pytest.mark.slow
def test_quadratic_sweep(asymptotics):
    result = asyncio.run(asymptotics.sweep_main_proposition(
        Potential(kind="quadratic", curvature=4.0), 0.0, [8.0, 16.0, 32.0, 64.0]
    ))
    assert not any(row.failed for row in result.rows)
    assert all(value == 0.0 for value in result.metric("harmonic_residual_over_mu"))
    assert -2.3 < result.fits["abs_A_minus_1"].slope < -1.7
    assert result.delta_hat == pytest.approx(-1.0 - result.fits["abs_A_minus_1"].slope)


@pytest.mark.slow
def test_rotated_log_sweep(asymptotics):
    base = Potential(kind="rotated-log", a=1.0, b=1.0)
    angle = rotation_angle(base.second_derivative_at_zero)
    result = asyncio.run(asymptotics.sweep_main_proposition(base, angle, [8.0, 16.0, 32.0, 64.0]))
    assert not any(row.failed for row in result.rows)
    for name in ("abs_A_minus_1", "normB", "normC", "lambda0_over_mu_minus_1"):
        assert result.fits[name].slope <= -1.1, name
    distances = result.metric("u0_minus_galpha")
    assert all(later < earlier for earlier, later in zip(distances, distances[1:]))
    assert 0.75 <= result.metric("gapD_W_over_c0")[-1] <= 1.25
    assert result.fits["overlap_relative_error"].slope <= -1.3
    assert result.fits["harmonic_residual_over_mu"].slope <= -1.3


@pytest.mark.slow
def test_singular_ratio_sweep(asymptotics):
    result = asyncio.run(asymptotics.sweep_singular_ratio(
        -math.pi / 12, 1.0, math.tan(math.pi / 6), [8.0, 16.0, 32.0, 64.0], 2
    ))
    assert result.experiment == "singular-ratio"
    # 正规族中 s_j/|λ_j| − 1 的衰减快于 W⁻²
    assert result.fits["s0_over_lambda0_minus_1"].slope <= -1.7
    assert result.fits["harmonic_gaussian_residual"].slope <= -1.7
    assert result.fits["singular_function_distance"].slope <= -1.7
    assert not any(name.startswith("nystrom_") for name in result.fits)
    assert result.rows[0].metrics["nystrom_singular_rel_error"] < 1e-6
    assert "nystrom_singular_rel_error" not in result.rows[1].metrics


@pytest.mark.parametrize("W", [8.0, 16.0])
def test_self_adjoint_singular_ratio_is_one(asymptotics, W):
    row = asymptotics.singular_ratio_row(0.0, 2.0, 0.0, W, 3, numeric=False)
    for j in range(4):
        assert row.metrics[f"s{j}_over_lambda{j}_minus_1"] < 1e-12


def test_singular_ratios_share_one_scale(asymptotics):
    row = asymptotics.singular_ratio_row(-math.pi / 12, 1.0, math.tan(math.pi / 6), 8.0, 3, numeric=False)
    ratios = [row.metrics[f"s{j}_over_lambda{j}_minus_1"] for j in range(4)]
    assert min(ratios) > 0
    assert max(ratios) <= 10 * min(ratios)


def test_row_value_error_marks_only_that_row(asymptotics, monkeypatch):
    def fake_row(potential, zeta_angle, W):
        if W == 16.0:
            raise ValueError("singular matrix")
        return SweepRow(W=W, metrics={"normB": W ** -2})

    monkeypatch.setattr(asymptotics, "main_proposition_row", fake_row)
    result = asyncio.run(asymptotics.sweep_main_proposition(
        Potential(kind="quadratic", curvature=4.0), 0.0, [8.0, 16.0, 32.0, 64.0, 128.0]
    ))
    assert [row.failed for row in result.rows] == [False, True, False, False, False]
    assert result.rows[1].error == "ValueError: singular matrix"
    assert result.fits["normB"].slope == pytest.approx(-2.0)
