import numpy as np
import pytest

from app.core.errors import DomainError
from app.services.bessel_oracle import bessel_boundary_m
from app.services.herglotz import IntervalUnion, free_boundary_m, midpoint_grid
from app.services.potentials import InverseSquare
from app.services.value_distribution import (
    BandSpec,
    GridFunction,
    MovingTarget,
    PiecewiseConstant,
    big_f,
    condition_a_ratio,
    condition_a_table,
    m_function_table,
    m_truncated,
    preimage_measure,
    theorem2_table,
    theta0_mod_pi,
    uad_check,
    weyl_radius,
)

POSITIVE = IntervalUnion.of((0.0, np.inf))


def test_big_f_free_examples(free):
    assert big_f(free, np.pi / 4, 1.0) == pytest.approx(-1.0, abs=1e-8)
    assert big_f(free, np.pi / 2, 1.0) == pytest.approx(0.0, abs=1e-8)
    assert np.isnan(big_f(free, np.pi, 1.0))


def test_big_f_vectorized_matches_closed_form(free):
    lam = np.linspace(1.0, 4.0, 7)
    k = np.sqrt(lam)
    np.testing.assert_allclose(big_f(free, 3.0, lam), -k / np.tan(3.0 * k), rtol=1e-7)


def test_big_f_requires_x_beyond_a(bessel0):
    with pytest.raises(DomainError):
        big_f(bessel0, 1.0, 1.0)


def test_m_truncated_free_limit(free):
    z = 1.0 + 0.1j
    assert abs(m_truncated(free, 200.0, z) - 1j * np.sqrt(z)) <= 1e-3


def test_m_truncated_real_argument_equals_big_f(free):
    assert m_truncated(free, np.pi / 4, 1.0) == big_f(free, np.pi / 4, 1.0)


def test_m_truncated_rejects_lower_half_plane(free):
    with pytest.raises(DomainError):
        m_truncated(free, 10.0, 1.0 - 0.1j)


def test_m_truncated_matches_closed_form_and_limit(free):
    z = 1.0 + 0.01j
    k = np.sqrt(z)
    m = m_truncated(free, 500.0, z)
    assert abs(m - (-k / np.tan(500.0 * k))) <= 1e-6
    assert abs(m - 1j * k) <= 2e-2


def test_weyl_disk_contraction(free):
    table = m_function_table(free, 1.0, [100.0, 200.0, 400.0, 800.0], [0.01])
    m = table["re_m"].to_numpy() + 1j * table["im_m"].to_numpy()
    gaps = np.abs(np.diff(m))
    assert gaps[0] > gaps[1] > gaps[2]
    assert np.all(table["im_m"] > 0)


def test_weyl_radius_bounds_later_values(bessel0):
    z = 2.0 + 0.1j
    m_b = m_truncated(bessel0, 20.0, z)
    m_later = m_truncated(bessel0, 60.0, z)
    assert abs(m_b - m_later) <= 2 * weyl_radius(bessel0, 20.0, z)


def test_weyl_radius_requires_upper_half_plane(free):
    with pytest.raises(DomainError):
        weyl_radius(free, 10.0, 1.0)


def test_preimage_full_line_and_empty(free):
    n = 2000
    h = 3.0 / n
    full = preimage_measure(free, 50.0, (1.0, 4.0), IntervalUnion.full_line(), n)
    assert 3.0 - 20 * h <= full <= 3.0 + 1e-12
    assert preimage_measure(free, 50.0, (1.0, 4.0), IntervalUnion.empty(), n) == 0.0


def test_preimage_positive_half_line(free):
    assert preimage_measure(free, 100.0, (1.0, 4.0), POSITIVE, 20_000) == pytest.approx(1.5, abs=0.05)


@pytest.mark.slow
def test_preimage_positive_half_line_fine_grid(free):
    assert preimage_measure(free, 100.0, (1.0, 4.0), POSITIVE, 100_000) == pytest.approx(1.5, abs=0.05)


def test_preimage_monotone_in_target(bessel0):
    small = preimage_measure(bessel0, 30.0, (1.0, 4.0), IntervalUnion.of((0.0, 1.0)), 3000)
    large = preimage_measure(bessel0, 30.0, (1.0, 4.0), POSITIVE, 3000)
    assert small <= large


def test_preimage_moving_target_matches_constant_union(bessel0):
    union = preimage_measure(bessel0, 30.0, (1.0, 4.0), IntervalUnion.of((-1.0, 2.0)), 3000)
    moving = preimage_measure(bessel0, 30.0, (1.0, 4.0), MovingTarget(-1.0, 2.0), 3000)
    assert union == moving


def test_moving_target_validation():
    with pytest.raises(DomainError):
        MovingTarget(1.0, 1.0).bounds(np.array([1.0]))
    with pytest.raises(DomainError):
        MovingTarget(0.0, np.inf).bounds(np.array([1.0]))


def test_theorem2_free_positive_half_line(free):
    table = theorem2_table(free, free_boundary_m(), POSITIVE, (1.0, 4.0), [25.0, 200.0], 20_000)
    assert list(table.columns) == ["x", "empirical", "limit", "abs_error"]
    assert np.all(np.abs(table["limit"] - 1.5) <= 1e-6)
    assert table["empirical"].iloc[-1] == pytest.approx(1.5, abs=0.05)


def test_theorem2_full_line(free):
    table = theorem2_table(free, free_boundary_m(), IntervalUnion.full_line(), (1.0, 4.0), [25.0, 50.0], 1000)
    np.testing.assert_allclose(table["limit"], 3.0)
    assert np.all(table["empirical"] >= 3.0 - 20 * 3.0 / 1000)


def test_theorem2_empty_target(free):
    table = theorem2_table(free, free_boundary_m(), IntervalUnion.empty(), (1.0, 4.0), [25.0, 50.0], 500)
    assert np.all(table["empirical"] == 0.0)
    assert np.all(table["limit"] == 0.0)


def test_theorem2_moving_target_limit(free):
    # omega((0, B), iB) = 1/4 pour B = sqrt(lambda)
    target = MovingTarget(0.0, lambda lam: np.sqrt(lam))
    table = theorem2_table(free, free_boundary_m(), target, (1.0, 4.0), [25.0], 1000)
    assert table["limit"].iloc[0] == pytest.approx(0.75, abs=1e-9)


@pytest.mark.slow
def test_theorem2_bessel_error_decays():
    p = InverseSquare(0.0, 1.0)
    model = bessel_boundary_m(0.0, 1.0, (1.0, 4.0))
    table = theorem2_table(p, model, IntervalUnion.of((0.0, 1.0)), (1.0, 4.0), [50.0, 100.0, 200.0], 100_000)
    errors = table["abs_error"].to_numpy()
    assert errors[1] < errors[0] + 0.01
    assert errors[2] < errors[1] + 0.01
    assert errors[2] < errors[0]


def test_theorem2_requires_positive_model(free):
    with pytest.raises(DomainError):
        theorem2_table(free, free_boundary_m(), POSITIVE, (-1.0, 4.0), [25.0], 100)


@pytest.mark.parametrize("lam,expected", [(4.0, 2.0), (16.0, 4.0 - np.pi)])
def test_theta0_mod_pi_free(free, lam, expected):
    assert theta0_mod_pi(free, lam, free_boundary_m(), 1.0) == pytest.approx(expected, abs=1e-8)


def test_theta0_mod_pi_at_left_endpoint(bessel0):
    model = bessel_boundary_m(0.0, 1.0, (1.0, 4.0), samples=None)
    assert theta0_mod_pi(bessel0, 2.0, model, 1.0) == 0.0


def test_theta0_mod_pi_range(bessel0):
    model = bessel_boundary_m(0.0, 1.0, (1.0, 4.0))
    values = np.array([theta0_mod_pi(bessel0, 2.0, model, x) for x in (3.0, 17.0, 41.0)])
    assert np.all((values >= 0) & (values < np.pi))


def test_uad_free_quarter_band(free):
    band = BandSpec(np.pi / 4, 3 * np.pi / 4)
    table = uad_check(free, free_boundary_m(), (1.0, 4.0), band, [200.0], 20_000)
    assert table["limit"].iloc[0] == pytest.approx(1.5)
    assert table["empirical"].iloc[0] == pytest.approx(1.5, abs=0.05)


@pytest.mark.slow
def test_uad_free_acceptance(free):
    table = uad_check(free, free_boundary_m(), (1.0, 4.0), BandSpec(np.pi / 4, 3 * np.pi / 4), [25.0, 200.0], 100_000)
    assert abs(table["empirical"].iloc[1] - 1.5) <= 0.05
    assert table["abs_error"].iloc[1] < table["abs_error"].iloc[0]


def test_uad_full_band(free):
    table = uad_check(free, free_boundary_m(), (1.0, 4.0), BandSpec(0.0, np.pi), [50.0], 2000)
    assert table["limit"].iloc[0] == pytest.approx(3.0)
    assert table["empirical"].iloc[0] == pytest.approx(3.0, abs=0.05)


def test_uad_step_band_limit_is_potential_independent(free, bessel_half):
    band = BandSpec(0.0, PiecewiseConstant((2.5,), (np.pi / 2, np.pi)))
    model = free_boundary_m()
    free_table = uad_check(free, model, (1.0, 4.0), band, [25.0], 200)
    other_table = uad_check(bessel_half, model, (1.0, 4.0), band, [25.0], 200)
    assert free_table["limit"].iloc[0] == pytest.approx(2.25)
    assert other_table["limit"].iloc[0] == free_table["limit"].iloc[0]


def test_uad_rows_ordered_by_x(free):
    table = uad_check(free, free_boundary_m(), (1.0, 4.0), BandSpec(0.0, np.pi / 2), [100.0, 25.0], 200)
    assert list(table["x"]) == [25.0, 100.0]


def test_band_validation():
    with pytest.raises(DomainError):
        BandSpec(1.0, 1.0).bounds(np.array([1.0, 2.0]))
    with pytest.raises(DomainError):
        BandSpec(0.0, 4.0).bounds(np.array([1.0]))


def test_piecewise_constant_is_left_continuous():
    step = PiecewiseConstant((2.5,), (1.0, 2.0))
    np.testing.assert_allclose(step(np.array([1.0, 2.5, 2.6])), [1.0, 1.0, 2.0])
    with pytest.raises(DomainError):
        PiecewiseConstant((1.0, 2.0), (0.0,))


def test_grid_function():
    gf = GridFunction.on_midpoints((1.0, 4.0), 3, [1.0, np.nan, 2.0])
    assert gf.integral() == pytest.approx(3.0)
    assert gf.interval == pytest.approx((1.0, 4.0))
    assert gf.with_values([True, False, True]).measure() == pytest.approx(2.0)
    with pytest.raises(DomainError):
        GridFunction(np.array([1.0, 1.0]), np.array([0.0, 0.0]), 1.0)
    with pytest.raises(DomainError):
        GridFunction(np.array([1.0, 2.0]), np.array([0.0]), 1.0)


@pytest.mark.parametrize("N", [10.0, 100.0, 1000.0])
def test_condition_a_free(free, N):
    assert abs(condition_a_ratio(free, 1.0, 1j, N)) <= 1.0 / N


def test_condition_a_free_lambda_four(free):
    table = condition_a_table(free, 4.0, 2j, [10.0, 100.0])
    assert np.all(table["abs_ratio"] <= 1.0 / (2.0 * table["N"]) + 1e-9)


def test_condition_a_short_interval(free):
    assert abs(condition_a_ratio(free, 1.0, 1j, 1e-3) - 1.0) < 1e-2


def test_condition_a_rejects_real_m(free):
    with pytest.raises(DomainError):
        condition_a_ratio(free, 1.0, 1.0, 10.0)


def test_uad_step_band_empirical(free):
    band = BandSpec(0.0, PiecewiseConstant((2.5,), (np.pi / 2, np.pi)))
    table = uad_check(free, free_boundary_m(), (1.0, 4.0), band, [200.0], 20_000)
    assert table["limit"].iloc[0] == pytest.approx(2.25)
    assert table["empirical"].iloc[0] == pytest.approx(2.25, abs=0.05)


def test_uad_bessel_order_zero(bessel0):
    model = bessel_boundary_m(0.0, 1.0, (1.0, 4.0))
    band = BandSpec(np.pi / 4, 3 * np.pi / 4)
    table = uad_check(bessel0, model, (1.0, 4.0), band, [25.0, 200.0], 20_000)
    assert table["limit"].iloc[0] == pytest.approx(1.5)
    assert table["abs_error"].iloc[1] <= 0.03
    assert table["abs_error"].iloc[1] < table["abs_error"].iloc[0]


def test_preimage_additive_over_disjoint_targets(bessel0):
    n = 3000
    h = 3.0 / n
    left = preimage_measure(bessel0, 30.0, (1.0, 4.0), IntervalUnion.of((-1.0, 0.5)), n)
    right = preimage_measure(bessel0, 30.0, (1.0, 4.0), IntervalUnion.of((0.5, 3.0)), n)
    both = preimage_measure(bessel0, 30.0, (1.0, 4.0), IntervalUnion.of((-1.0, 0.5), (0.5, 3.0)), n)
    assert abs(left + right - both) <= h


@pytest.mark.parametrize("x", [200.0, 400.0])
def test_theorem2_free_matches_closed_form_count(free, x):
    n = 20_000
    grid, h = midpoint_grid((1.0, 4.0), n)
    k = np.sqrt(grid)
    with np.errstate(divide="ignore"):
        F = -k / np.tan(k * x)
    expected = h * np.count_nonzero(np.isfinite(F) & (F > 0))
    table = theorem2_table(free, free_boundary_m(), POSITIVE, (1.0, 4.0), [x], n)
    assert table["empirical"].iloc[0] == pytest.approx(expected, abs=2 * h)


def test_uad_free_matches_closed_form_count(free):
    # A = 0, B = sqrt(lambda): theta0(x, lambda) = sqrt(lambda) x
    n = 20_000
    grid, h = midpoint_grid((1.0, 4.0), n)
    reduced = np.mod(np.sqrt(grid) * 200.0, np.pi)
    expected = h * np.count_nonzero((reduced > np.pi / 4) & (reduced < 3 * np.pi / 4))
    table = uad_check(free, free_boundary_m(), (1.0, 4.0), BandSpec(np.pi / 4, 3 * np.pi / 4), [200.0], n)
    assert table["empirical"].iloc[0] == pytest.approx(expected, abs=2 * h)
