import math

import numpy as np
import pytest

from core.bifurcation import (
    DensityField,
    FieldSpec,
    GridAxis,
    ParamGrid,
    ScalarField,
    bifurcation_measure,
    boundary_distance,
    ddc_constant,
    ddc_density,
    empirical_vs_density,
    mandelbrot_mask,
    mass_outside,
    quadratic_window,
    scan,
    scan_activity,
    scan_L,
    scan_Lnr,
    wedge_constant,
    wedge_density,
)
from core.exceptions import ConfigurationError

LN2 = math.log(2.0)


def _grid2(resolution=16, half_width=1.5):
    axis = GridAxis(0j, half_width, resolution)
    return ParamGrid((axis, axis))


def test_grid_axis_geometry():
    axis = GridAxis(1.0 + 1.0j, 2.0, 16)
    assert axis.h == pytest.approx(0.25)
    assert axis.x_centers[0] == pytest.approx(-0.875)
    assert axis.y_edges[-1] == pytest.approx(3.0)
    values = axis.values()
    assert values.shape == (16, 16)
    assert values[0, -1] == pytest.approx(2.875 - 0.875j)


def test_rectangular_grid_axis_keeps_square_cells():
    axis = GridAxis(-0.5 + 0j, 2.0, 64, 48)
    assert axis.shape == (48, 64)
    assert axis.half_height == pytest.approx(1.5)
    assert axis.y_edges[1] - axis.y_edges[0] == pytest.approx(axis.h)
    assert axis.values().shape == (48, 64)
    assert GridAxis(0j, 1.0, 16) == GridAxis(0j, 1.0, 16, 16)
    with pytest.raises(ConfigurationError):
        GridAxis(0j, 1.0, 32, 8)


def test_quadratic_window_bounds():
    axis = quadratic_window(64).axes[0]
    assert axis.shape == (48, 64)
    assert (axis.x_edges[0], axis.x_edges[-1]) == pytest.approx((-2.5, 1.5))
    assert (axis.y_edges[0], axis.y_edges[-1]) == pytest.approx((-1.5, 1.5))
    square = quadratic_window(64, square=True).axes[0]
    assert square.shape == (64, 64)
    assert (square.y_edges[0], square.y_edges[-1]) == pytest.approx((-2.0, 2.0))


@pytest.mark.parametrize("kwargs", [
    {"center": 0j, "half_width": 1.0, "resolution": 8},
    {"center": 0j, "half_width": 0.0, "resolution": 32},
    {"center": complex(np.inf, 0), "half_width": 1.0, "resolution": 32},
])
def test_grid_axis_rejects_bad_windows(kwargs):
    with pytest.raises(ConfigurationError):
        GridAxis(**kwargs)


def test_param_grid_parse():
    grid = ParamGrid.parse("-0.5,0,2,64")
    assert grid.dimension == 1
    assert grid.shape == (64, 64)
    assert str(grid) == "-0.5,0,2,64"
    grid = ParamGrid.parse("0,0,1,16,0.5,0,2,32")
    assert grid.shape == (16, 16, 32, 32)
    assert grid.cell_volume == pytest.approx((2 / 16) ** 2 * (4 / 32) ** 2)
    grid = ParamGrid.parse("-0.5,0,2,64,48")
    assert grid == quadratic_window(64)
    assert str(grid) == "-0.5,0,2,64,48"
    assert ParamGrid.parse("0,0,1,16,32,0,0,1,16,16").shape == (32, 16, 16, 16)


@pytest.mark.parametrize("text", ["0,0,1", "0,0,1,16,2", "a,0,1,16", "0,0,1,4", "0,0,1,16,16,0,0,1,16"])
def test_param_grid_parse_rejects(text):
    with pytest.raises(ConfigurationError):
        ParamGrid.parse(text)


def test_param_grid_embeds_slices():
    grid = ParamGrid((GridAxis(0j, 1.0, 16),), base=(0.1, 0.2j, 0.0), coords=(2,))
    params = grid.parameters(3)
    assert params.shape == (16, 16, 3)
    assert np.all(params[..., 0] == 0.1)
    assert np.all(params[..., 1] == 0.2j)
    assert np.array_equal(params[..., 2], grid.axes[0].values())
    with pytest.raises(ConfigurationError):
        grid.parameters(2)
    with pytest.raises(ConfigurationError):
        ParamGrid((GridAxis(0j, 1.0, 16),), coords=(0, 1))


def test_two_dimensional_parameters():
    grid = _grid2()
    params = grid.parameters(2)
    assert params.shape == (16, 16, 16, 16, 2)
    first, second = grid.axis_values()
    assert params[3, 4, 5, 6, 0] == first[3, 4, 0, 0]
    assert params[3, 4, 5, 6, 1] == second[0, 0, 5, 6]


@pytest.mark.parametrize("text,kind,label", [
    ("L", "L", "L"),
    ("activity:1", "activity", "g_c_1"),
    ("lnr:6:0.5", "lnr", "L_6_0.5"),
    ("Mandelbrot", "mandelbrot", "mandelbrot_mask"),
])
def test_field_spec_parse(text, kind, label):
    spec = FieldSpec.parse(text)
    assert spec.kind == kind
    assert spec.label == label


@pytest.mark.parametrize("text", ["lyapunov", "activity:", "lnr:6", "lnr:x:1"])
def test_field_spec_rejects(text):
    with pytest.raises(ConfigurationError):
        FieldSpec.parse(text)


def test_scalar_field_checks_shape(small_grid):
    with pytest.raises(ConfigurationError):
        ScalarField(small_grid, np.zeros((3, 3)), "bad")
    field = ScalarField(small_grid, np.zeros(small_grid.shape), "zero")
    assert field.flagged_count == 0
    assert not field.values.flags.writeable


def test_scan_L_of_quadratic_family(small_grid):
    field = scan_L("quadratic", small_grid)
    c = small_grid.axes[0].values()
    mask = mandelbrot_mask(small_grid).values.astype(bool)
    assert field.label == "L"
    assert np.all(field.values >= LN2 - 1e-12)
    assert np.allclose(field.values[mask & ~field.flags], LN2)
    assert np.all(field.values[np.abs(c) > 2.2] > LN2 + 0.1)


def test_scan_is_independent_of_worker_count():
    grid = ParamGrid((GridAxis(-0.5 + 0j, 2.0, 96),))
    serial = scan_L("quadratic", grid, workers=1)
    parallel = scan_L("quadratic", grid, workers=3)
    assert np.array_equal(serial.values, parallel.values)
    assert np.array_equal(serial.flags, parallel.flags)


def test_scan_activity_of_cubic_family():
    grid = _grid2(16, 3.0)
    g0 = scan_activity("polyca:3", grid, 0, tol=1e-8, max_iter=256)
    assert g0.values.shape == grid.shape
    assert np.all(g0.values >= 0.0)
    assert g0.label == "g_c_0"
    with pytest.raises(ConfigurationError):
        scan_activity("polyca:3", grid, 2)


def test_scan_activity_matches_L_for_quadratic(small_grid):
    activity = scan_activity("quadratic", small_grid, 0)
    field = scan_L("quadratic", small_grid)
    assert np.allclose(field.values, LN2 + activity.values)


def test_scan_Lnr_of_period_two():
    grid = ParamGrid((GridAxis(-0.5 + 0j, 2.0, 16),))
    field = scan_Lnr("quadratic", grid, 2, 1.0)
    c = grid.axes[0].values()
    expected = np.log(np.maximum(np.abs(4.0 * (c + 1.0)), 1.0)) / 4.0
    assert field.flagged_count == 0
    assert np.allclose(field.values, expected, atol=1e-9)


@pytest.mark.parametrize("n,r", [(0, 0.5), (2, 1.5), (2, -0.1)])
def test_scan_Lnr_rejects(small_grid, n, r):
    with pytest.raises(ConfigurationError):
        scan_Lnr("quadratic", small_grid, n, r)


def test_scan_dispatch(small_grid):
    assert scan("quadratic", small_grid, "mandelbrot").label == "mandelbrot_mask"
    with pytest.raises(ConfigurationError):
        scan("polyca:3", small_grid, "mandelbrot")
    with pytest.raises(ConfigurationError):
        scan("quadratic", _grid2(), "L")


def test_mandelbrot_mask_and_boundary_distance():
    grid = quadratic_window(64)
    mask = mandelbrot_mask(grid).values.astype(bool)
    c = grid.axes[0].values()
    assert mask[np.unravel_index(np.argmin(np.abs(c + 0.1)), c.shape)]
    assert not mask[np.unravel_index(np.argmin(np.abs(c - 1.0)), c.shape)]
    distance = boundary_distance(grid)
    assert distance.shape == grid.shape
    assert np.all(distance >= 0.0)
    corner = np.abs(c - (1.5 + 1.5j)) < 0.1
    assert corner.any()
    assert np.all(distance[corner] > 1.0)


def test_ddc_constant_is_close_to_inverse_two_pi():
    assert ddc_constant() == pytest.approx(1.0 / (2.0 * math.pi), rel=0.01)


def test_ddc_calibration_anchor():
    grid = ParamGrid((GridAxis(0j, 1.0, 128),))
    lam = grid.axes[0].values()
    density = ddc_density(ScalarField(grid, np.log(np.abs(lam)), "ln|lambda|"))
    assert density.total_mass == pytest.approx(1.0, abs=0.005)
    assert density.raw_mass == pytest.approx(1.0, abs=0.02)
    assert density.negative_mass_fraction < 0.01


@pytest.mark.parametrize("function", [
    lambda c: np.real(c * c),
    lambda c: np.log(np.abs(c - 5.0)),
    lambda c: np.real(c) + 3.0,
])
def test_ddc_of_pluriharmonic_fields_has_no_mass(function):
    grid = quadratic_window(128)
    density = ddc_density(ScalarField(grid, function(grid.axes[0].values()), "h"))
    assert abs(density.total_mass) <= 1e-3


def test_ddc_of_quadratic_lyapunov_field_has_half_mass():
    field = scan_L("quadratic", quadratic_window(64))
    density = ddc_density(field)
    assert 2.0 * density.total_mass == pytest.approx(1.0, abs=0.05)
    assert np.all(density.density[0, :] == 0.0)


def test_quadratic_mass_is_stable_under_refinement():
    coarse = ddc_density(scan_L("quadratic", quadratic_window(64))).total_mass
    fine = ddc_density(scan_L("quadratic", quadratic_window(128))).total_mass
    assert abs(fine - coarse) / fine < 0.01


def test_ddc_mass_is_additive_over_critical_points():
    grid = ParamGrid((GridAxis(0j, 2.0, 32),), base=(0.3, 0.0), coords=(1,))
    total = ddc_density(scan_L("polyca:3", grid, max_iter=512)).total_mass
    parts = [ddc_density(scan_activity("polyca:3", grid, i, max_iter=512)).total_mass for i in (0, 1)]
    assert all(part > 0.0 for part in parts)
    assert total == pytest.approx(sum(parts), rel=0.03)


def test_negative_mass_fraction_at_production_resolution():
    anchor_grid = ParamGrid((GridAxis(0j, 1.0, 512),))
    lam = anchor_grid.axes[0].values()
    anchor = ddc_density(ScalarField(anchor_grid, np.log(np.abs(lam)), "ln|lambda|"))
    assert anchor.negative_mass_fraction <= 0.02
    window = quadratic_window(512)
    c = window.axes[0].values()
    potential = ddc_density(ScalarField(window, 0.5 * np.log1p(np.abs(c + 0.5) ** 2), "fs"))
    assert potential.negative_mass_fraction <= 0.02


def test_ddc_marks_cells_next_to_flagged_cells(small_grid):
    flags = np.zeros(small_grid.shape, dtype=bool)
    flags[10, 10] = True
    values = np.where(flags, np.nan, 0.0)
    density = ddc_density(ScalarField(small_grid, values, "f", flags))
    assert density.invalid.sum() == 5
    assert density.invalid[10, 11] and density.invalid[9, 10]
    assert not density.invalid[11, 11]
    assert np.all(np.isfinite(density.density))


def test_ddc_rejects_two_dimensional_grids():
    with pytest.raises(ConfigurationError):
        ddc_density(ScalarField(_grid2(), np.zeros(_grid2().shape), "u"))


def test_wedge_constant_is_close_to_analytic_scale():
    assert wedge_constant() == pytest.approx(4.0 / math.pi ** 2, rel=0.05)


def test_wedge_reproduces_fubini_study_pair_on_reference_grid():
    grid = _grid2(32, 1.5)
    first, second = grid.axis_values()
    u = ScalarField(grid, 0.5 * np.log1p(np.abs(first) ** 2) + 0.5 * np.log1p(np.abs(second) ** 2), "fs")
    density = wedge_density(u, u)
    # the square lies between the disks of radius 1.40625 and 1.40625 * sqrt(2)
    assert 0.88 < density.total_mass < 1.28
    assert bifurcation_measure(u).total_mass == pytest.approx(density.total_mass / 2.0)


def test_wedge_of_single_variable_field_vanishes():
    grid = _grid2()
    first, second = grid.axis_values()
    u = ScalarField(grid, np.broadcast_to(np.log(np.abs(first) + 1.0), grid.shape), "u")
    v = ScalarField(grid, np.broadcast_to(np.abs(second) ** 2, grid.shape), "v")
    assert wedge_density(u, u).total_mass == 0.0
    assert wedge_density(u, v).total_mass == pytest.approx(wedge_density(v, u).total_mass)


def test_wedge_of_product_potentials():
    grid = _grid2(16, 1.0)
    first, second = grid.axis_values()
    u = ScalarField(grid, np.broadcast_to(np.abs(first) ** 2, grid.shape), "u")
    v = ScalarField(grid, np.broadcast_to(np.abs(second) ** 2, grid.shape), "v")
    density = wedge_density(u, v)
    interior = density.density[1:-1, 1:-1, 1:-1, 1:-1]
    assert np.allclose(interior, wedge_constant())


def test_wedge_rejects_mismatched_grids(small_grid):
    u = ScalarField(_grid2(16), np.zeros(_grid2(16).shape), "u")
    v = ScalarField(_grid2(16, 2.0), np.zeros(_grid2(16, 2.0).shape), "v")
    with pytest.raises(ConfigurationError):
        wedge_density(u, v)
    with pytest.raises(ConfigurationError):
        wedge_density(ScalarField(small_grid, np.zeros(small_grid.shape), "w"), u)


def test_mass_outside(small_grid):
    density = np.zeros(small_grid.shape)
    density[4, 4] = 3.0
    density[20, 20] = -1.0
    field = DensityField(small_grid, density, 0.0, 0.0, 0.0)
    region = np.zeros(small_grid.shape, dtype=bool)
    region[4, 4] = True
    assert mass_outside(field, region) == pytest.approx(0.25)
    with pytest.raises(ConfigurationError):
        mass_outside(field, np.zeros((2, 2), dtype=bool))


def test_empirical_measure_of_the_density_itself(small_grid):
    rng = np.random.default_rng(4)
    density = DensityField(small_grid, rng.uniform(0.0, 1.0, small_grid.shape), 1.0, 1.0, 0.0)
    points = small_grid.axes[0].values().ravel()
    distance = empirical_vs_density(points, density.cell_mass.ravel(), density, bins=16)
    assert distance == pytest.approx(0.0, abs=1e-12)
    assert empirical_vs_density(np.array([-0.5 + 0j]), None, density, bins=16) > 0.9
