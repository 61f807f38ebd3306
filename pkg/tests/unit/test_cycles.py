import math

import mpmath
import numpy as np
import pytest

import core.cycles
from core.cycles import (
    CycleClass,
    continuation_cycles,
    cycle_count,
    cycle_residuals,
    cycle_table,
    dynatomic,
    dynatomic_roots,
    fixed_points_of_iterate,
    group_cycles,
    lyap_spectrum_average,
    multiplier_spectrum,
    nu,
    per_n_centers,
    per_n_w,
    periodic_cycles,
)
from core.exceptions import ConfigurationError, ContinuationError, CycleGroupingError, NotDivisibleError
from core.maps import from_chart, instantiate


@pytest.mark.parametrize("n,points,cycles", [
    (1, 2, 2), (2, 2, 1), (3, 6, 2), (4, 12, 3), (5, 30, 6), (6, 54, 9),
])
def test_counting_laws(n, points, cycles):
    assert nu(2, n) == points
    assert cycle_count(2, n) == cycles


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6])
def test_dynatomic_degree(n):
    m = instantiate("quadratic", [0.3 + 0.1j])
    poly = dynatomic(m, n)
    assert poly.poly.degree == nu(2, n) == poly.nu


def test_dynatomic_of_period_two():
    # (f^2(z) - z) / (f(z) - z) = z^2 + z + c + 1
    poly = dynatomic(instantiate("quadratic", [0.5j]), 2)
    assert np.allclose(poly.poly.coeffs, [1.0 + 0.5j, 1.0, 1.0])


def test_dynatomic_rejects_bad_requests():
    with pytest.raises(ConfigurationError):
        dynatomic(instantiate("mod2", [1.0, 1.0]), 2)
    with pytest.raises(ConfigurationError):
        dynatomic(instantiate("quadratic", [0.0]), 11)


def test_dynatomic_names_period_when_division_fails(monkeypatch):
    def not_divisible(num, den, tol):
        raise NotDivisibleError("remainder", 1.0)
    monkeypatch.setattr("core.cycles.divide_exact", not_divisible)
    with pytest.raises(NotDivisibleError) as excinfo:
        dynatomic(instantiate("quadratic", [0.0]), 4)
    assert excinfo.value.period == 4


@pytest.mark.parametrize("n", [3, 4])
def test_orbit_roots_agree_with_expanded_dynatomic(n):
    m = instantiate("quadratic", [-0.1 + 0.3j])
    coeffs = dynatomic(m, n).poly.coeffs
    with mpmath.workdps(40):
        reference = [complex(r) for r in mpmath.polyroots(
            [mpmath.mpc(c) for c in coeffs[::-1]], maxsteps=400, extraprec=120)]
    found = dynatomic_roots(m, n)
    assert len(found) == len(reference)
    for r in reference:
        assert np.min(np.abs(found - r)) <= 1e-8


def test_fixed_points_of_iterate_counts():
    assert len(fixed_points_of_iterate(instantiate("quadratic", [0.1]), 4).lifts) == 16
    assert len(fixed_points_of_iterate(instantiate("mod2", [2.0, 0.0]), 3).lifts) == 9
    with pytest.raises(ConfigurationError):
        fixed_points_of_iterate(instantiate("quadratic", [0.1]), 0)


def test_periodic_cycles_of_basilica():
    records = periodic_cycles(instantiate("quadratic", [-1.0]), 2)
    assert len(records) == 1
    record = records[0]
    assert record.point == pytest.approx(-1.0)
    assert np.allclose(sorted(record.orbit, key=lambda z: z.real), [-1.0, 0.0], atol=1e-10)
    assert abs(record.multiplier) <= 1e-10
    assert record.cycle_class is CycleClass.ATTRACTING


def test_periodic_cycles_of_rational_squaring():
    # mod2 at (2, 0) is z^2; its 2-cycle is the pair of primitive cube roots of unity
    records = periodic_cycles(instantiate("mod2", [2.0, 0.0]), 2)
    assert len(records) == 1
    assert records[0].multiplier == pytest.approx(4.0, abs=1e-8)
    assert abs(abs(records[0].point) - 1.0) <= 1e-8
    assert records[0].cycle_class is CycleClass.REPELLING


@pytest.mark.parametrize("n", [2, 3, 4])
def test_chebyshev_multipliers(n):
    spectrum = multiplier_spectrum("quadratic", [-2.0], n)
    assert len(spectrum.w_list) == cycle_count(2, n)
    assert not spectrum.collision
    assert np.allclose(np.abs(spectrum.w_list), 2.0 ** n, rtol=1e-6)


def test_cycle_average_of_squaring():
    assert lyap_spectrum_average("quadratic", [0.0], 5) == pytest.approx(6 * 5 * math.log(2.0) / 32)


def test_cycle_table_columns():
    records = periodic_cycles(instantiate("quadratic", [0.2]), 3)
    rows, classes = cycle_table(records)
    assert rows.shape == (2, 5)
    assert np.all(rows[:, 0] == 3)
    assert classes == ["repelling", "repelling"]


def test_group_cycles_rejects_non_permutations():
    lifts = from_chart(np.array([0.0, 1.0]))
    images = from_chart(np.array([1.0, 1.0]))
    with pytest.raises(CycleGroupingError):
        group_cycles(lifts, images, 2)
    with pytest.raises(CycleGroupingError):
        group_cycles(lifts, from_chart(np.array([5.0, 0.0])), 2)


@pytest.mark.parametrize("multiplier,expected", [
    (0.0, CycleClass.ATTRACTING),
    (0.999, CycleClass.ATTRACTING),
    (np.exp(0.3j), CycleClass.NEUTRAL),
    (1.0 + 5e-7, CycleClass.NEUTRAL),
    (-1.01, CycleClass.REPELLING),
])
def test_cycle_class(multiplier, expected):
    assert CycleClass.of(multiplier) is expected


@pytest.mark.parametrize("n,count", [(1, 1), (2, 1), (3, 3), (4, 6), (5, 15), (6, 27)])
def test_center_counts(n, count):
    assert len(per_n_centers(n)) == count


def test_center_values():
    assert np.allclose(per_n_centers(2), [-1.0])
    centers = per_n_centers(3)
    assert np.min(np.abs(centers - (-1.7548776662466927))) <= 1e-10
    assert np.min(np.abs(centers - (-0.12256116687665361 + 0.74486176661974423j))) <= 1e-10
    for c in per_n_centers(5):
        z = 0.0
        for _ in range(5):
            z = z * z + c
        assert abs(z) <= 1e-8


@pytest.mark.parametrize("n", [0, 15, 2.0])
def test_center_period_out_of_range(n):
    with pytest.raises(ConfigurationError):
        per_n_centers(n)


def test_per_n_w_oracle():
    result = per_n_w(2, 0.0)
    assert np.allclose(result.parameters, [-1.0], atol=1e-10)
    assert result.failures == []


@pytest.mark.parametrize("w", [0.5, 0.5j, -0.9 + 0.1j])
def test_per_n_w_closed_forms(w):
    fixed = per_n_w(1, w)
    assert np.allclose(fixed.parameters, [w / 2 - w * w / 4], atol=1e-10)
    two = per_n_w(2, w)
    assert np.allclose(two.parameters, [w / 4 - 1.0], atol=1e-10)
    assert np.all(two.residuals <= 1e-9)


def test_per_n_w_has_one_curve_per_center():
    result = per_n_w(4, 0.5)
    assert len(result.parameters) == len(per_n_centers(4))
    assert np.all(result.residuals <= 1e-9)


def test_per_n_w_reports_failed_continuations():
    with pytest.raises(ContinuationError) as excinfo:
        per_n_w(3, 0.5, centers=np.array([np.nan]))
    assert excinfo.value.failures == [0]
    with pytest.raises(ConfigurationError):
        per_n_w(11, 0.5)


def test_dynatomic_division_tolerance_is_honoured(monkeypatch):
    seen = []
    divide = core.cycles.divide_exact

    def recording(num, den, tol):
        seen.append(tol)
        return divide(num, den, tol)
    monkeypatch.setattr("core.cycles.divide_exact", recording)
    m = instantiate("quadratic", [0.3 + 0.1j])
    assert dynatomic(m, 4, tol=1e-7).poly.degree == 12
    assert seen == [1e-7]


def test_root_tolerance_reaches_the_center_solver():
    assert np.allclose(np.sort_complex(per_n_centers(4, 1e-6)), np.sort_complex(per_n_centers(4)), atol=1e-8)


def test_cycle_residuals_are_recomputed_from_parameter_and_point():
    result = per_n_w(3, 0.0)
    assert result.points.shape == result.parameters.shape
    assert np.all(cycle_residuals(result.parameters, result.points, 3, 0.0) <= 1e-9)
    assert np.all(cycle_residuals(result.parameters, result.points + 0.1, 3, 0.0) > 1e-3)
    with pytest.raises(ConfigurationError):
        cycle_residuals(result.parameters, result.points[:1], 3, 0.0)


def test_continuation_cycles_follow_the_parameter_order():
    result = per_n_w(2, 0.5)
    records = continuation_cycles(result, 2)
    assert len(records) == len(result.parameters) == 1
    assert records[0].period == 2
    assert records[0].multiplier == pytest.approx(0.5, abs=1e-9)
    assert records[0].cycle_class is CycleClass.ATTRACTING
