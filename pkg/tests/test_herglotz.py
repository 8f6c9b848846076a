import numpy as np
import pytest

from app.core.errors import DomainError
from app.services.herglotz import (
    BoundaryM,
    IntervalUnion,
    RationalHerglotz,
    angle,
    angle_boundary,
    free_boundary_m,
    midpoint_grid,
    omega,
    theorem1_gap,
)


@pytest.mark.parametrize(
    "S,z,expected",
    [
        (IntervalUnion.of((-1.0, 1.0)), 1j, np.pi / 2),
        (IntervalUnion.full_line(), 0.3 + 2.0j, np.pi),
        (IntervalUnion.of((0.0, 2.0)), 1.0 + 1.0j, np.pi / 2),
    ],
)
def test_angle_examples(S, z, expected):
    assert angle(S, z) == pytest.approx(expected)


def test_angle_rejects_real_point():
    with pytest.raises(DomainError):
        angle(IntervalUnion.of((0.0, 1.0)), 0.5)


def test_angle_is_additive_and_bounded():
    z = np.array([0.2 + 0.5j, -3.0 + 0.01j, 7.0 + 4.0j])
    left, right = IntervalUnion.of((0.0, 1.0)), IntervalUnion.of((2.0, 5.0))
    both = IntervalUnion.of((0.0, 1.0), (2.0, 5.0))
    np.testing.assert_allclose(angle(both, z), angle(left, z) + angle(right, z))
    assert np.all((angle(both, z) >= 0) & (angle(both, z) <= np.pi))


def test_angle_tends_to_boundary_value():
    S = IntervalUnion.of((0.0, 2.0), (5.0, 6.0))
    X = np.array([-1.0, 0.5, 3.0, 5.5, 9.0])
    np.testing.assert_allclose(angle(S, X + 1e-7j), angle_boundary(S, X), atol=1e-5)


@pytest.mark.parametrize("X,expected", [(1.0, np.pi), (3.0, 0.0), (5.5, np.pi)])
def test_angle_boundary(X, expected):
    S = IntervalUnion.of((0.0, 2.0), (5.0, 6.0))
    assert angle_boundary(S, X) == expected


def test_angle_boundary_endpoint_is_indeterminate():
    assert np.isnan(angle_boundary(IntervalUnion.of((0.0, 2.0)), 2.0))


@pytest.mark.parametrize(
    "S,value,expected",
    [
        (IntervalUnion.of((0.0, np.inf)), 1j, 0.5),
        (IntervalUnion.of((-1.0, 1.0)), 1j, 0.5),
        (IntervalUnion.of((0.0, 2.0)), 1.0, 1.0),
    ],
)
def test_omega_examples(S, value, expected):
    assert omega(S, value) == pytest.approx(expected)


def test_omega_monotone_under_inclusion():
    values = np.array([0.5 + 0.1j, 3.0 + 2.0j, -1.0 + 0.3j, 1.5])
    small = omega(IntervalUnion.of((0.0, 1.0)), values)
    large = omega(IntervalUnion.of((-0.5, 2.0)), values)
    assert np.all(small <= large)


def test_omega_rejects_lower_half_plane():
    with pytest.raises(DomainError):
        omega(IntervalUnion.of((0.0, 1.0)), 1.0 - 1j)


def test_interval_union_validation_and_complement():
    with pytest.raises(DomainError):
        IntervalUnion.of((0.0, 2.0), (1.0, 3.0))
    with pytest.raises(DomainError):
        IntervalUnion.of((1.0, 1.0))
    comp = IntervalUnion.of((0.0, 1.0), (2.0, np.inf)).complement()
    assert comp.intervals == ((-np.inf, 0.0), (1.0, 2.0))
    assert IntervalUnion.empty().complement() == IntervalUnion.full_line()


def test_midpoint_grid():
    grid, h = midpoint_grid((1.0, 4.0), 3)
    np.testing.assert_allclose(grid, [1.5, 2.5, 3.5])
    assert h == 1.0
    with pytest.raises(DomainError):
        midpoint_grid((1.0, 4.0), 1)
    with pytest.raises(DomainError):
        midpoint_grid((1.0, np.inf), 10)


def test_rational_herglotz_maps_upper_half_plane():
    f = RationalHerglotz(poles=((1.0, 1.0), (-2.0, 0.5)), slope=0.3, offset=-1.0)
    z = np.array([0.1 + 0.01j, 5.0 + 3.0j, -2.0 + 0.5j])
    assert np.all(f(z).imag > 0)
    assert f.boundary(0.0) == pytest.approx(-1.0 + 1.0 - 0.25)


def test_rational_herglotz_validation():
    with pytest.raises(DomainError):
        RationalHerglotz(poles=((0.0, -1.0),))
    with pytest.raises(DomainError):
        RationalHerglotz(slope=-1.0)


def test_boundary_m_free():
    model = free_boundary_m()
    A, B = model(np.array([-4.0, 4.0]))
    np.testing.assert_allclose(A, [-2.0, 0.0])
    np.testing.assert_allclose(B, [0.0, 2.0])
    assert model.m_plus(9.0) == pytest.approx(3j)
    with pytest.raises(DomainError):
        model.require_positive(np.array([1.0, -1.0]))


def test_boundary_m_interval_and_provenance():
    model = free_boundary_m((1.0, 4.0))
    with pytest.raises(DomainError):
        model(5.0)
    with pytest.raises(DomainError):
        BoundaryM(lambda lam: (lam, lam), (0.0, 1.0), "guess")


def test_boundary_m_resampled():
    model = free_boundary_m().resampled((1.0, 4.0), 129)
    assert model.provenance == "grid-interpolated"
    A, B = model(2.3)
    assert B == pytest.approx(np.sqrt(2.3), abs=1e-7)
    assert A == pytest.approx(0.0, abs=1e-12)


def test_gap_empty_target():
    f = RationalHerglotz(poles=((1.0, 1.0),))
    lhs, rhs = theorem1_gap(f, IntervalUnion.empty(), (-1.0, 3.0), 0.1, 1000)
    assert lhs == 0.0
    assert rhs > 0.0


def test_gap_constant_function():
    f = RationalHerglotz(imag_offset=1.0)
    lhs, _ = theorem1_gap(f, IntervalUnion.of((0.0, 2.0)), (-1.0, 3.0), 0.1, 1000)
    assert lhs == 0.0


def test_gap_bound_and_decreasing_rhs():
    f = RationalHerglotz(poles=((1.0, 1.0),))
    S = IntervalUnion.of((0.0, 2.0))
    results = [theorem1_gap(f, S, (-1.0, 3.0), eps, 20_000) for eps in (1.0, 0.1, 0.01)]
    for lhs, rhs in results:
        assert lhs <= rhs + 1e-3
    rhs_values = [rhs for _, rhs in results]
    assert rhs_values[0] > rhs_values[1] > rhs_values[2]


def test_gap_rejects_nonpositive_eps():
    with pytest.raises(DomainError):
        theorem1_gap(RationalHerglotz(), IntervalUnion.empty(), (0.0, 1.0), 0.0, 10)


@pytest.mark.parametrize("S", [IntervalUnion.full_line(), IntervalUnion.of((0.0, 2.0))])
def test_omega_pole_is_excluded(S):
    assert omega(S, np.nan) == 0.0
    assert np.array_equal(omega(S, np.array([1.0, np.nan])), [1.0, 0.0])
