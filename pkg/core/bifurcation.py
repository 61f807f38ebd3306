"""Bifurcation Currents Module.

This module scans parameter grids of a family and turns the scanned
potentials into densities. Scans produce the Lyapunov field, the activity
potentials g(c_i) of the marked critical points, the averaged multiplier
potentials L_n^r and the Mandelbrot membership mask. Densities are the
discrete dd^c of a 1-dim field (bifurcation current) and the discrete
mixed Monge-Ampere wedge of two 2-dim fields (bifurcation measure).

Grid values are indexed [iy, ix] on 1-dim grids and [iy1, ix1, iy2, ix2] on
2-dim grids.
"""

import logging
import math
import re
from dataclasses import dataclass, replace
from functools import lru_cache, partial
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import integrate, ndimage

from core.cycles import ACCEPT_STEP, multiplier_spectrum
from core.exceptions import ConfigurationError, DynamicsException
from core.family import FamilyKind, FamilySpec, MapFamily, create_family
from core.green import green_lift_batch, green_poly_batch
from core.lyapunov import LyapMethod, estimate
from core.maps import critical_lifts_batch, instantiate
from core.metrics import histogram_on_grid, total_variation
from core.polyalg import resultant
from utils.parallel import chunk_ranges, ordered_map

logger = logging.getLogger(__name__)

MIN_RESOLUTION = 16
CHUNK_CELLS = 4096
ESCAPE_RADIUS = 2.0
DDC_REFERENCE_RESOLUTION = 256
WEDGE_REFERENCE_RESOLUTION = 32
WEDGE_REFERENCE_HALF_WIDTH = 1.5


# ---------------------------------------------------------------------------
# Grids and fields
# ---------------------------------------------------------------------------

def _readonly(array: np.ndarray) -> np.ndarray:
    array = np.array(array)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class GridAxis:
    """A window of one complex coordinate cut into square cells of side h = 2 w / resolution.

    The window is [cx-w, cx+w] horizontally and rows cells high, centred on
    cy; rows defaults to resolution, which gives the square [cy-w, cy+w].
    """
    center: complex
    half_width: float
    resolution: int
    rows: Optional[int] = None

    def __post_init__(self):
        if self.resolution < MIN_RESOLUTION:
            raise ConfigurationError(f"Grid resolution must be at least {MIN_RESOLUTION}, got {self.resolution}")
        rows = self.resolution if self.rows is None else int(self.rows)
        if rows < MIN_RESOLUTION:
            raise ConfigurationError(f"Grid rows must be at least {MIN_RESOLUTION}, got {rows}")
        if not self.half_width > 0 or not np.isfinite(self.half_width):
            raise ConfigurationError(f"Grid half-width must be positive, got {self.half_width}")
        if not np.isfinite(complex(self.center)):
            raise ConfigurationError(f"Grid center must be finite, got {self.center}")
        object.__setattr__(self, "center", complex(self.center))
        object.__setattr__(self, "rows", rows)

    @property
    def h(self) -> float:
        return 2.0 * self.half_width / self.resolution

    @property
    def half_height(self) -> float:
        return 0.5 * self.rows * self.h

    @property
    def is_square(self) -> bool:
        return self.rows == self.resolution

    @property
    def shape(self) -> Tuple[int, int]:
        return self.rows, self.resolution

    @property
    def x_centers(self) -> np.ndarray:
        return self.center.real - self.half_width + (np.arange(self.resolution) + 0.5) * self.h

    @property
    def y_centers(self) -> np.ndarray:
        return self.center.imag - self.half_height + (np.arange(self.rows) + 0.5) * self.h

    @property
    def x_edges(self) -> np.ndarray:
        return self.center.real - self.half_width + np.arange(self.resolution + 1) * self.h

    @property
    def y_edges(self) -> np.ndarray:
        return self.center.imag - self.half_height + np.arange(self.rows + 1) * self.h

    def values(self) -> np.ndarray:
        """Complex cell centers indexed [iy, ix]."""
        return self.x_centers[None, :] + 1j * self.y_centers[:, None]

    def __str__(self) -> str:
        text = f"{self.center.real:g},{self.center.imag:g},{self.half_width:g},{self.resolution}"
        return text if self.is_square else f"{text},{self.rows}"


@dataclass(frozen=True)
class ParamGrid:
    """One or two complex axes embedded in a family's parameter space.

    coords names the family coordinates that vary along the axes; every
    other coordinate stays at base.
    """
    axes: Tuple[GridAxis, ...]
    base: Tuple[complex, ...] = ()
    coords: Tuple[int, ...] = ()

    def __post_init__(self):
        if len(self.axes) not in (1, 2):
            raise ConfigurationError(f"Grids have one or two complex axes, got {len(self.axes)}")
        object.__setattr__(self, "axes", tuple(self.axes))
        object.__setattr__(self, "base", tuple(complex(x) for x in self.base))
        coords = tuple(int(k) for k in self.coords) or tuple(range(len(self.axes)))
        if len(coords) != len(self.axes) or len(set(coords)) != len(coords) or min(coords) < 0:
            raise ConfigurationError(f"Grid coordinates {coords} do not match {len(self.axes)} axes")
        object.__setattr__(self, "coords", coords)

    @property
    def dimension(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(n for axis in self.axes for n in axis.shape)

    @property
    def cell_volume(self) -> float:
        return float(np.prod([axis.h ** 2 for axis in self.axes]))

    def same_geometry(self, other: "ParamGrid") -> bool:
        return self.axes == other.axes

    def axis_values(self) -> Tuple[np.ndarray, ...]:
        """Complex coordinate of every axis, broadcastable to the grid shape."""
        if self.dimension == 1:
            return (self.axes[0].values(),)
        first = self.axes[0].values()[:, :, None, None]
        second = self.axes[1].values()[None, None, :, :]
        return first, second

    def parameters(self, dim: int) -> np.ndarray:
        """Parameter point of every cell, shape grid.shape + (dim,)."""
        if max(self.coords) >= dim:
            raise ConfigurationError(f"Grid coordinates {self.coords} exceed parameter dimension {dim}")
        base = np.zeros(dim, dtype=complex)
        if self.base:
            if len(self.base) != dim:
                raise ConfigurationError(f"Grid base has {len(self.base)} entries, family needs {dim}")
            base[:] = self.base
        if dim > self.dimension and not self.base:
            logger.debug(f"Coordinates outside {self.coords} held at 0")
        params = np.broadcast_to(base, self.shape + (dim,)).copy()
        for coord, values in zip(self.coords, self.axis_values()):
            params[..., coord] = np.broadcast_to(values, self.shape)
        return params

    @classmethod
    def parse(cls, text: str, base: Sequence[complex] = (), coords: Sequence[int] = ()) -> "ParamGrid":
        """Parse 'cx,cy,halfw,res[,rows]' for one axis, twice that for two axes.

        Four values per axis give a square window, five values add the row
        count of a rectangular one; both axes use the same form.
        """
        parts = [p.strip() for p in text.split(",") if p.strip()]
        if len(parts) not in (4, 5, 8, 10):
            raise ConfigurationError(f"Grid needs 4, 5, 8 or 10 comma-separated values, got {text!r}")
        width = 5 if len(parts) in (5, 10) else 4
        axes = []
        try:
            for k in range(0, len(parts), width):
                cx, cy, half_width = (float(p) for p in parts[k:k + 3])
                rows = int(parts[k + 4]) if width == 5 else None
                axes.append(GridAxis(complex(cx, cy), half_width, int(parts[k + 3]), rows))
        except ValueError as e:
            raise ConfigurationError(f"Invalid grid {text!r}: {e}")
        return cls(tuple(axes), tuple(base), tuple(coords))

    def __str__(self) -> str:
        return ",".join(str(a) for a in self.axes)


QUADRATIC_WINDOW = (-2.5, 1.5, -1.5, 1.5)


def quadratic_window(resolution: int = 512, square: bool = False) -> ParamGrid:
    """Window [-2.5, 1.5] x [-1.5, 1.5] around the Mandelbrot set, resolution cells wide.

    Cells are square, so the window has round(3/4 resolution) rows. With
    square=True the window is [-2.5, 1.5] x [-2, 2] instead.
    """
    x_min, x_max, y_min, y_max = QUADRATIC_WINDOW
    half_width = 0.5 * (x_max - x_min)
    center = complex(0.5 * (x_min + x_max), 0.5 * (y_min + y_max))
    rows = None if square else int(round(resolution * (y_max - y_min) / (x_max - x_min)))
    return ParamGrid((GridAxis(center, half_width, resolution, rows),))


@dataclass(frozen=True)
class ScalarField:
    grid: ParamGrid
    values: np.ndarray
    label: str
    flags: Optional[np.ndarray] = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.shape:
            raise ConfigurationError(f"Field shape {values.shape} does not match grid {self.grid.shape}")
        flags = np.zeros(values.shape, dtype=bool) if self.flags is None else np.asarray(self.flags, dtype=bool)
        object.__setattr__(self, "values", _readonly(values))
        object.__setattr__(self, "flags", _readonly(flags))

    @property
    def flagged_count(self) -> int:
        return int(np.sum(self.flags))


@dataclass(frozen=True)
class DensityField:
    """Density per unit Lebesgue volume and its mass bookkeeping.

    total_mass uses the calibrated constant, raw_mass the analytic one.
    Cells whose stencil touches a flagged cell are marked invalid; their
    mass is reported separately and not removed from the totals.
    """
    grid: ParamGrid
    density: np.ndarray
    total_mass: float
    raw_mass: float
    negative_mass_fraction: float
    invalid: Optional[np.ndarray] = None
    invalid_mass: float = 0.0

    def __post_init__(self):
        invalid = np.zeros(self.grid.shape, dtype=bool) if self.invalid is None else self.invalid
        object.__setattr__(self, "density", _readonly(self.density))
        object.__setattr__(self, "invalid", _readonly(np.asarray(invalid, dtype=bool)))

    @property
    def cell_mass(self) -> np.ndarray:
        return self.density * self.grid.cell_volume

    def as_field(self, label: str = "density") -> ScalarField:
        return ScalarField(self.grid, self.density, label, self.invalid)


# ---------------------------------------------------------------------------
# Field selection
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FieldSpec:
    """Which scalar field a scan computes: L, activity:<i>, lnr:<n>:<r> or mandelbrot."""
    kind: str
    index: int = 0
    n: int = 0
    r: float = 0.0

    @classmethod
    def parse(cls, text: str) -> "FieldSpec":
        value = text.strip().lower()
        if value == "l":
            return cls("L")
        if value == "mandelbrot":
            return cls("mandelbrot")
        match = re.fullmatch(r"activity:(\d+)", value)
        if match:
            return cls("activity", index=int(match.group(1)))
        match = re.fullmatch(r"lnr:(\d+):([0-9.eE+-]+)", value)
        if match:
            try:
                return cls("lnr", n=int(match.group(1)), r=float(match.group(2)))
            except ValueError:
                pass
        raise ConfigurationError(f"Unknown field {text!r} (expected L, activity:<i>, lnr:<n>:<r> or mandelbrot)")

    @property
    def label(self) -> str:
        if self.kind == "activity":
            return f"g_c_{self.index}"
        if self.kind == "lnr":
            return f"L_{self.n}_{self.r:g}"
        if self.kind == "mandelbrot":
            return "mandelbrot_mask"
        return "L"


# ---------------------------------------------------------------------------
# Cell kernels (module level so that worker processes can import them)
# ---------------------------------------------------------------------------

def _lyapunov_kernel(params: np.ndarray, offset: int, spec: str, tol: float,
                     max_iter: int) -> Tuple[np.ndarray, np.ndarray]:
    adapter = create_family(spec)
    d = adapter.degree
    if adapter.is_polynomial:
        coeffs = adapter.polynomial_coefficients(params)
        critical = adapter.critical_points(params)
        batch = green_poly_batch(coeffs[:, None, :], critical, tol, max_iter)
        return math.log(d) + batch.values.sum(axis=1), batch.undecided.any(axis=1)
    a, b = adapter.lift_coefficients(params)
    lifts = critical_lifts_batch(a, b)
    batch = green_lift_batch(a[:, None, :], b[:, None, :], lifts, tol)
    res = np.abs(resultant((a, b)))
    values = batch.values.sum(axis=1) - 2.0 / d * np.log(res) - math.log(d)
    return values, ~np.isfinite(values)


def _activity_kernel(params: np.ndarray, offset: int, spec: str, index: int, tol: float,
                     max_iter: int) -> Tuple[np.ndarray, np.ndarray]:
    adapter = create_family(spec)
    if adapter.is_polynomial:
        coeffs = adapter.polynomial_coefficients(params)
        critical = adapter.critical_points(params)[:, index]
        batch = green_poly_batch(coeffs, critical, tol, max_iter)
        return batch.values, batch.undecided
    a, b = adapter.lift_coefficients(params)
    lifts = critical_lifts_batch(a, b)[:, index]
    batch = green_lift_batch(a, b, lifts, tol)
    return batch.values, ~np.isfinite(batch.values)


def _estimator_kernel(params: np.ndarray, offset: int, spec: str, method: LyapMethod,
                      options: dict) -> Tuple[np.ndarray, np.ndarray]:
    values = np.empty(len(params))
    flags = np.zeros(len(params), dtype=bool)
    for k, point in enumerate(params):
        seed = int(np.random.SeedSequence([options.get("seed", 0), offset + k]).generate_state(1)[0])
        result = estimate(instantiate(spec, point), method, **{**options, "seed": seed})
        values[k] = result.value
        flags[k] = result.flagged
    return values, flags


def _lnr_kernel(params: np.ndarray, offset: int, spec: str, n: int, r: float,
                root_tol: float) -> Tuple[np.ndarray, np.ndarray]:
    d = create_family(spec).degree
    values = np.empty(len(params))
    flags = np.zeros(len(params), dtype=bool)
    for k, point in enumerate(params):
        spectrum = multiplier_spectrum(spec, point, n, root_tol=root_tol)
        with np.errstate(divide="ignore"):
            total = np.sum(np.log(np.maximum(np.abs(spectrum.w_list), r)))
        values[k] = total / d ** n
        flags[k] = spectrum.collision or not np.isfinite(values[k])
        if flags[k]:
            values[k] = np.nan
    return values, flags


def _guarded(kernel: Callable, task: Tuple[int, np.ndarray]) -> Tuple[np.ndarray, np.ndarray]:
    """Run a kernel on a chunk; on failure retry cell by cell, flagging failed cells."""
    offset, params = task
    try:
        values, flags = kernel(params, offset)
        return np.asarray(values, dtype=float), np.asarray(flags, dtype=bool)
    except DynamicsException as e:
        logger.debug(f"Chunk at cell {offset} failed ({e}); retrying per cell")
    values = np.full(len(params), np.nan)
    flags = np.ones(len(params), dtype=bool)
    for k in range(len(params)):
        try:
            v, f = kernel(params[k:k + 1], offset + k)
            values[k], flags[k] = float(v[0]), bool(f[0])
        except DynamicsException as e:
            logger.debug(f"Cell {offset + k} failed: {e}")
    return values, flags


def _scan(family: MapFamily, grid: ParamGrid, kernel: Callable, label: str, workers: int) -> ScalarField:
    if grid.dimension > family.parameter_dimension:
        raise ConfigurationError(f"{grid.dimension}-dim grid for a {family.parameter_dimension}-parameter family")
    params = grid.parameters(family.parameter_dimension).reshape(-1, family.parameter_dimension)
    tasks = [(s.start, params[s]) for s in chunk_ranges(len(params), CHUNK_CELLS)]
    logger.info(f"Scanning {label} for {family.spec} on {grid.shape} cells ({len(tasks)} chunks)")
    results = ordered_map(partial(_guarded, kernel), tasks, workers)
    values = np.concatenate([v for v, _ in results]).reshape(grid.shape)
    flags = np.concatenate([f for _, f in results]).reshape(grid.shape)
    if flags.any():
        logger.warning(f"{int(flags.sum())} flagged cell(s) in {label} scan")
    logger.info(f"Finished {label} scan")
    return ScalarField(grid, values, label, flags)


# ---------------------------------------------------------------------------
# Scans
# ---------------------------------------------------------------------------

def scan_L(family: Union[FamilySpec, str], grid: ParamGrid, method: Union[LyapMethod, str] = LyapMethod.FORMULA,
           tol: float = 1e-10, max_iter: int = 4096, workers: int = 1, **options) -> ScalarField:
    """Lyapunov exponent on every cell.

    The formula method runs vectorised over chunks of cells; cycles and
    birkhoff run one map per cell with the remaining options passed to the
    estimator. Cells with undecided critical orbits are flagged.
    """
    adapter = create_family(family)
    method = LyapMethod(method) if isinstance(method, str) else method
    if method is LyapMethod.FORMULA:
        kernel = partial(_lyapunov_kernel, spec=str(adapter.spec), tol=tol, max_iter=max_iter)
    else:
        kernel = partial(_estimator_kernel, spec=str(adapter.spec), method=method,
                         options={"tol": tol, "max_iter": max_iter, **options})
    return _scan(adapter, grid, kernel, "L", workers)


def scan_activity(family: Union[FamilySpec, str], grid: ParamGrid, i: int, tol: float = 1e-10,
                  max_iter: int = 4096, workers: int = 1) -> ScalarField:
    """Green value of the i-th marked critical point on every cell."""
    adapter = create_family(family)
    if not 0 <= i < adapter.critical_count:
        raise ConfigurationError(f"{adapter.spec} has {adapter.critical_count} marked critical points, got index {i}")
    kernel = partial(_activity_kernel, spec=str(adapter.spec), index=i, tol=tol, max_iter=max_iter)
    return _scan(adapter, grid, kernel, f"g_c_{i}", workers)


def scan_Lnr(family: Union[FamilySpec, str], grid: ParamGrid, n: int, r: float, workers: int = 1,
             root_tol: float = ACCEPT_STEP) -> ScalarField:
    """L_n^r = d^-n sum_j ln max(|w_j|, r) over the period-n multipliers; collisions flagged."""
    adapter = create_family(family)
    if grid.dimension != 1:
        raise ConfigurationError("L_n^r scans need a 1-dim grid")
    if not 0.0 <= r <= 1.0:
        raise ConfigurationError(f"r must lie in [0, 1], got {r}")
    if n < 1:
        raise ConfigurationError(f"Period must be positive, got {n}")
    kernel = partial(_lnr_kernel, spec=str(adapter.spec), n=n, r=r, root_tol=root_tol)
    return _scan(adapter, grid, kernel, f"L_{n}_{r:g}", workers)


def scan(family: Union[FamilySpec, str], grid: ParamGrid, field_spec: Union[FieldSpec, str],
         method: Union[LyapMethod, str] = LyapMethod.FORMULA, tol: float = 1e-10, max_iter: int = 4096,
         workers: int = 1, **options) -> ScalarField:
    """Dispatch a field string such as "L" or "lnr:6:0.5" to its scan."""
    field_spec = FieldSpec.parse(field_spec) if isinstance(field_spec, str) else field_spec
    if field_spec.kind == "L":
        return scan_L(family, grid, method, tol, max_iter, workers, **options)
    if field_spec.kind == "activity":
        return scan_activity(family, grid, field_spec.index, tol, max_iter, workers)
    if field_spec.kind == "lnr":
        return scan_Lnr(family, grid, field_spec.n, field_spec.r, workers,
                        options.get("root_tol", ACCEPT_STEP))
    if create_family(family).spec.kind is not FamilyKind.QUADRATIC:
        raise ConfigurationError("The Mandelbrot mask is defined for the quadratic family")
    return mandelbrot_mask(grid, max_iter)


# ---------------------------------------------------------------------------
# Mandelbrot set
# ---------------------------------------------------------------------------

def _escape_kernel(c: np.ndarray, max_iter: int) -> Tuple[np.ndarray, np.ndarray]:
    """Membership (never leaving |z| <= 2) and the exterior distance estimate 2 sinh(G)/|G'|."""
    z = np.zeros_like(c)
    dz = np.zeros_like(c)
    inside = np.ones(c.shape, dtype=bool)
    steps = np.zeros(c.shape, dtype=int)
    active = np.ones(c.shape, dtype=bool)
    for n in range(1, max_iter + 1):
        dz[active] = 2.0 * z[active] * dz[active] + 1.0
        z[active] = z[active] ** 2 + c[active]
        steps[active] = n
        escaped = active & (np.abs(z) > ESCAPE_RADIUS)
        inside &= ~escaped
        active &= ~escaped
        if not active.any():
            break
    # push escaped orbits far out so that G and G' are accurate
    far = ~inside
    for _ in range(64):
        grow = far & (np.abs(z) < 1e8)
        if not grow.any():
            break
        dz[grow] = 2.0 * z[grow] * dz[grow] + 1.0
        z[grow] = z[grow] ** 2 + c[grow]
        steps[grow] += 1
    distance = np.zeros(c.shape)
    modulus = np.abs(z[far])
    scale = 2.0 ** (-steps[far].astype(float))
    green = np.log(modulus) * scale
    gradient = np.abs(dz[far]) / modulus * scale
    distance[far] = 2.0 * np.sinh(green) / gradient
    return inside, distance


def mandelbrot_mask(grid: ParamGrid, max_iter: int = 1000) -> ScalarField:
    """1 on cells whose critical orbit stays in |z| <= 2 for max_iter steps, else 0."""
    if grid.dimension != 1:
        raise ConfigurationError("The Mandelbrot mask needs a 1-dim grid")
    inside, _ = _escape_kernel(grid.axes[0].values(), max_iter)
    logger.info(f"Mandelbrot mask: {int(inside.sum())} of {inside.size} cells inside")
    return ScalarField(grid, inside.astype(float), "mandelbrot_mask")


def boundary_distance(grid: ParamGrid, max_iter: int = 1000) -> np.ndarray:
    """Upper estimate of the distance from each cell center to the boundary of M.

    Inside cells use the Euclidean distance transform to the nearest outside
    cell; outside cells take the smaller of the transform to the nearest
    inside cell and the exterior distance estimate.
    """
    if grid.dimension != 1:
        raise ConfigurationError("Boundary distances need a 1-dim grid")
    inside, estimate_outside = _escape_kernel(grid.axes[0].values(), max_iter)
    h = grid.axes[0].h
    to_outside = ndimage.distance_transform_edt(inside) * h
    to_inside = ndimage.distance_transform_edt(~inside) * h if inside.any() else np.full(inside.shape, np.inf)
    return np.where(inside, to_outside, np.minimum(to_inside, estimate_outside))


# ---------------------------------------------------------------------------
# Discrete dd^c
# ---------------------------------------------------------------------------

def _interior(shape: Tuple[int, ...], shifts: Optional[dict] = None) -> Tuple[slice, ...]:
    shifts = shifts or {}
    return tuple(slice(1 + shifts.get(k, 0), n - 1 + shifts.get(k, 0)) for k, n in enumerate(shape))


def _second(u: np.ndarray, axis: int, h: float) -> np.ndarray:
    return (u[_interior(u.shape, {axis: 1})] - 2.0 * u[_interior(u.shape)]
            + u[_interior(u.shape, {axis: -1})]) / h ** 2


def _mixed(u: np.ndarray, first: int, second: int, h1: float, h2: float) -> np.ndarray:
    def at(s1, s2):
        return u[_interior(u.shape, {first: s1, second: s2})]
    return (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * h1 * h2)


def _laplacian(u: np.ndarray, h: float) -> np.ndarray:
    """Five-point Laplacian on the interior cells."""
    return _second(u, 0, h) + _second(u, 1, h)


def _invalid_cells(flags: np.ndarray) -> np.ndarray:
    footprint = np.ones((3,) * flags.ndim, dtype=bool)
    if flags.ndim == 2:
        footprint = ndimage.generate_binary_structure(2, 1)
    return ndimage.binary_dilation(flags, structure=footprint)


def _density_field(grid: ParamGrid, interior_density: np.ndarray, scale: float, raw_scale: float,
                   flags: np.ndarray) -> DensityField:
    density = np.zeros(grid.shape)
    density[_interior(grid.shape)] = interior_density * scale
    invalid = _invalid_cells(flags) | ~np.isfinite(density)
    density = np.where(np.isfinite(density), density, 0.0)
    volume = grid.cell_volume

    mass = density * volume
    total = float(mass.sum())
    absolute = float(np.abs(mass).sum())
    negative = float(-mass[mass < 0].sum())
    invalid_mass = float(np.abs(mass[invalid]).sum())
    if invalid.any():
        logger.warning(f"{int(invalid.sum())} density cell(s) touch flagged cells (mass {invalid_mass:.3e})")
    return DensityField(
        grid=grid,
        density=density,
        total_mass=total,
        raw_mass=total * raw_scale / scale,
        negative_mass_fraction=negative / absolute if absolute > 0 else 0.0,
        invalid=invalid,
        invalid_mass=invalid_mass,
    )


def _sanitized(field: ScalarField) -> np.ndarray:
    return np.where(np.isfinite(field.values), field.values, 0.0)


@lru_cache(maxsize=None)
def ddc_constant() -> float:
    """Scale making the discrete dd^c of ln|lambda| have unit mass.

    Fixed once on a reference grid centred at the singularity, which falls
    on a cell corner.
    """
    axis = GridAxis(0j, 1.0, DDC_REFERENCE_RESOLUTION)
    anchor = np.log(np.abs(axis.values()))
    raw = float(_laplacian(anchor, axis.h).sum()) * axis.h ** 2
    logger.debug(f"dd^c calibration: raw Laplacian mass {raw:.12f} (2 pi = {2 * math.pi:.12f})")
    return 1.0 / raw


def ddc_density(field: ScalarField) -> DensityField:
    """Discrete dd^c of a 1-dim field; the one-cell margin carries no mass.

    Raises:
        ConfigurationError: On a 2-dim grid.
    """
    if field.grid.dimension != 1:
        raise ConfigurationError("dd^c densities need a 1-dim grid; use wedge_density for 2-dim grids")
    h = field.grid.axes[0].h
    laplacian = _laplacian(_sanitized(field), h)
    result = _density_field(field.grid, laplacian, ddc_constant(), 1.0 / (2.0 * math.pi), field.flags)
    logger.info(f"dd^c of {field.label}: mass {result.total_mass:.6f} (raw {result.raw_mass:.6f}), "
                f"negative fraction {result.negative_mass_fraction:.4f}")
    return result


# ---------------------------------------------------------------------------
# Discrete wedge
# ---------------------------------------------------------------------------

def _hessian(u: np.ndarray, grid: ParamGrid) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """u_{1 1bar}, u_{2 2bar} and u_{1 2bar} on the interior of a 2-dim grid."""
    h1, h2 = grid.axes[0].h, grid.axes[1].h
    u11 = 0.25 * (_second(u, 0, h1) + _second(u, 1, h1))
    u22 = 0.25 * (_second(u, 2, h2) + _second(u, 3, h2))
    u12 = 0.25 * (_mixed(u, 1, 3, h1, h2) + _mixed(u, 0, 2, h1, h2)
                  + 1j * (_mixed(u, 1, 2, h1, h2) - _mixed(u, 0, 3, h1, h2)))
    return u11, u22, u12


def _wedge_bracket(u: np.ndarray, v: np.ndarray, grid: ParamGrid) -> np.ndarray:
    u11, u22, u12 = _hessian(u, grid)
    v11, v22, v12 = (u11, u22, u12) if v is u else _hessian(v, grid)
    return u11 * v22 + u22 * v11 - 2.0 * np.real(u12 * np.conj(v12))


def _fubini_study_mass(low: float, high: float) -> float:
    """Mass of 1/(pi (1 + x^2 + y^2)^2) over the square [low, high]^2."""
    value, _ = integrate.dblquad(lambda y, x: 1.0 / (math.pi * (1.0 + x * x + y * y) ** 2),
                                 low, high, low, high)
    return value


@lru_cache(maxsize=None)
def wedge_constant(resolution: int = WEDGE_REFERENCE_RESOLUTION,
                   half_width: float = WEDGE_REFERENCE_HALF_WIDTH) -> float:
    """Scale of the discrete wedge, calibrated on u = v = sum_k (1/2) ln(1 + |lambda_k|^2).

    The exact wedge of that pair is 2 w(l1) w(l2) with w the Fubini-Study
    density; its mass over the interior cells comes from numerical
    quadrature.
    """
    axis = GridAxis(0j, half_width, resolution)
    grid = ParamGrid((axis, axis))
    first, second = grid.axis_values()
    u = 0.5 * np.log1p(np.abs(first) ** 2) + 0.5 * np.log1p(np.abs(second) ** 2)
    raw = float(_wedge_bracket(u, u, grid).sum()) * grid.cell_volume
    edge = half_width - axis.h
    exact = 2.0 * _fubini_study_mass(-edge, edge) ** 2
    constant = exact / raw
    logger.debug(f"Wedge calibration: constant {constant:.8f} (4/pi^2 = {4 / math.pi ** 2:.8f})")
    return constant


def wedge_density(u: ScalarField, v: ScalarField) -> DensityField:
    """Discrete dd^c u ^ dd^c v on a 2-dim grid.

    Raises:
        ConfigurationError: If the grids are not 2-dim or differ.
    """
    if u.grid.dimension != 2 or v.grid.dimension != 2:
        raise ConfigurationError("Wedge densities need 2-dim grids")
    if not u.grid.same_geometry(v.grid):
        raise ConfigurationError("Wedge fields must share the grid geometry")
    uu = _sanitized(u)
    vv = uu if v is u else _sanitized(v)
    bracket = _wedge_bracket(uu, vv, u.grid)
    result = _density_field(u.grid, bracket, wedge_constant(), 4.0 / math.pi ** 2, u.flags | v.flags)
    logger.info(f"Wedge of {u.label} and {v.label}: mass {result.total_mass:.6f} (raw {result.raw_mass:.6f})")
    return result


def bifurcation_measure(field: ScalarField) -> DensityField:
    """(dd^c L)^2 / 2 for a Lyapunov field on a 2-dim grid."""
    wedge = wedge_density(field, field)
    return replace(wedge, density=wedge.density / 2.0, total_mass=wedge.total_mass / 2.0,
                   raw_mass=wedge.raw_mass / 2.0, invalid_mass=wedge.invalid_mass / 2.0)


# ---------------------------------------------------------------------------
# Measure comparisons
# ---------------------------------------------------------------------------

def mass_outside(density: DensityField, region: np.ndarray) -> float:
    """Fraction of absolute mass on cells outside region (a boolean mask over the grid)."""
    region = np.asarray(region, dtype=bool)
    if region.shape != density.grid.shape:
        raise ConfigurationError(f"Region shape {region.shape} does not match grid {density.grid.shape}")
    mass = np.abs(density.cell_mass)
    total = mass.sum()
    return float(mass[~region].sum() / total) if total > 0 else 0.0


def empirical_vs_density(points: np.ndarray, weights: Optional[np.ndarray], density: DensityField,
                         bins: int = 64) -> float:
    """Total variation between a weighted point set and a density after binning both.

    The density is truncated to its positive part and both measures are
    normalised to probability on a coarsening of the window that is bins
    wide and keeps the aspect ratio of the grid.
    """
    if density.grid.dimension != 1:
        raise ConfigurationError("Empirical comparison needs a 1-dim density")
    axis = density.grid.axes[0]
    bins = min(bins, axis.resolution)
    rows = max(1, int(round(bins * axis.rows / axis.resolution)))
    x_edges = np.linspace(axis.x_edges[0], axis.x_edges[-1], bins + 1)
    y_edges = np.linspace(axis.y_edges[0], axis.y_edges[-1], rows + 1)
    empirical = histogram_on_grid(points, weights, x_edges, y_edges)
    cell_mass = np.clip(density.cell_mass, 0.0, None)
    binned = histogram_on_grid(axis.values(), cell_mass, x_edges, y_edges)
    return total_variation(empirical, binned)
