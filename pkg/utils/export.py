"""Export Utility Module.

This module writes the files a run produces: CSV tables with 17 significant
digits, 16-bit binary PGM images with a min/max sidecar, and the echo of the
resolved configuration. It also reads field CSV files back for densities.
"""

import logging
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from core.bifurcation import GridAxis, ParamGrid, ScalarField
from core.config import RunConfig
from core.exceptions import ConfigurationError
from core.lyapunov import LyapEstimate
from utils.platform import ensure_parent_exists

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"
PGM_MAXVAL = 65535


def _save(path: str, header: str, rows: np.ndarray, fmt) -> str:
    ensure_parent_exists(path)
    with open(path, "w", encoding="ascii", newline="\n") as fo:
        np.savetxt(fo, rows, fmt=fmt, delimiter=",", newline="\n", header=header, comments="")
    logger.debug(f"Wrote {len(rows)} row(s) to {path}")
    return path


def write_table(path: str, columns: Sequence[str], rows: np.ndarray) -> str:
    """Write a float table with one header line."""
    rows = np.asarray(rows, dtype=float).reshape(-1, len(columns))
    return _save(path, ",".join(columns), rows, FLOAT_FORMAT)


def field_rows(field: ScalarField) -> Tuple[List[str], np.ndarray]:
    """Columns and rows of a field in grid order.

    1-dim grids give x,y,value with the x index running fastest; 2-dim
    grids give x1,y1,x2,y2,value with the second axis running fastest.
    """
    grid = field.grid
    if grid.dimension == 1:
        lam = np.broadcast_to(grid.axis_values()[0], grid.shape).ravel()
        return ["x", "y", "value"], np.column_stack([lam.real, lam.imag, field.values.ravel()])
    first, second = (np.broadcast_to(v, grid.shape).ravel() for v in grid.axis_values())
    return (["x1", "y1", "x2", "y2", "value"],
            np.column_stack([first.real, first.imag, second.real, second.imag, field.values.ravel()]))


def write_field_csv(path: str, field: ScalarField) -> str:
    columns, rows = field_rows(field)
    return write_table(path, columns, rows)


def _axis_from_coordinates(x: np.ndarray, y: np.ndarray) -> GridAxis:
    xs = np.unique(x)
    ys = np.unique(y)
    if xs.size < 2 or ys.size < 2:
        raise ConfigurationError(f"Field CSV has too few cell centers ({xs.size} x {ys.size})")
    h = float(xs[1] - xs[0])
    if not np.isclose(float(ys[1] - ys[0]), h, rtol=1e-6):
        raise ConfigurationError(f"Field CSV cells are not square ({h:g} x {float(ys[1] - ys[0]):g})")
    half_width = 0.5 * h * xs.size
    center = complex(0.5 * (xs[0] + xs[-1]), 0.5 * (ys[0] + ys[-1]))
    return GridAxis(center, half_width, int(xs.size), int(ys.size))


def read_field_csv(path: str, label: Optional[str] = None) -> ScalarField:
    """Read a field CSV written by write_field_csv.

    Non-finite values become flagged cells.

    Raises:
        ConfigurationError: If the file is missing or not a field table.
    """
    try:
        with open(path, encoding="ascii") as fi:
            header = fi.readline().strip().split(",")
            data = np.loadtxt(fi, delimiter=",", ndmin=2)
    except (OSError, ValueError) as e:
        raise ConfigurationError(f"Cannot read field CSV {path}: {e}")
    if header == ["x", "y", "value"]:
        axes: Tuple[GridAxis, ...] = (_axis_from_coordinates(data[:, 0], data[:, 1]),)
    elif header == ["x1", "y1", "x2", "y2", "value"]:
        axes = (_axis_from_coordinates(data[:, 0], data[:, 1]), _axis_from_coordinates(data[:, 2], data[:, 3]))
    else:
        raise ConfigurationError(f"{path} is not a field CSV (header {','.join(header)})")
    grid = ParamGrid(axes)
    expected = int(np.prod(grid.shape))
    if data.shape[0] != expected:
        raise ConfigurationError(f"{path} has {data.shape[0]} rows, grid {grid} needs {expected}")
    values = data[:, -1].reshape(grid.shape)
    logger.info(f"Read {grid.dimension}-dim field on grid {grid} from {path}")
    return ScalarField(grid, values, label or path, ~np.isfinite(values))


def write_cycles_csv(path: str, rows: np.ndarray, classes: Sequence[str]) -> str:
    """Cycle table n,re_z,im_z,re_w,im_w,class."""
    rows = np.asarray(rows, dtype=float).reshape(-1, 5)
    table = np.empty((len(rows), 6), dtype=object)
    table[:, 0] = rows[:, 0].astype(int)
    table[:, 1:5] = rows[:, 1:5]
    table[:, 5] = list(classes)
    fmt = ["%d"] + [FLOAT_FORMAT] * 4 + ["%s"]
    return _save(path, "n,re_z,im_z,re_w,im_w,class", table, fmt)


def write_estimates_csv(path: str, estimates: Sequence[LyapEstimate]) -> str:
    """Lyapunov estimates as method,value,error,flagged rows."""
    table = np.empty((len(estimates), 4), dtype=object)
    for k, e in enumerate(estimates):
        table[k] = (e.method.value, e.value, e.error, int(e.flagged))
    return _save(path, "method,value,error,flagged", table, ["%s", FLOAT_FORMAT, FLOAT_FORMAT, "%d"])


def write_samples_csv(path: str, points: np.ndarray) -> str:
    """Chart coordinates of a sample cloud as re,im rows."""
    points = np.asarray(points, dtype=complex).ravel()
    return write_table(path, ["re", "im"], np.column_stack([points.real, points.imag]))


def marginal(field: ScalarField) -> np.ndarray:
    """Values on the first axis after integrating out the second one."""
    if field.grid.dimension == 1:
        return np.asarray(field.values)
    h2 = field.grid.axes[1].h
    return np.nansum(field.values, axis=(2, 3)) * h2 ** 2


def write_pgm(path: str, values: np.ndarray) -> Tuple[float, float]:
    """Write a 16-bit binary PGM (maxval 65535, big-endian) and its sidecar.

    Rows are flipped so the top of the image is the largest imaginary part.
    Non-finite cells are drawn black. The sidecar <path>.txt records the
    value range mapped onto [0, 65535].

    Returns:
        Tuple[float, float]: The min and max finite values.
    """
    values = np.asarray(values, dtype=float)
    if values.ndim != 2:
        raise ConfigurationError(f"PGM images need a 2-dim array, got shape {values.shape}")
    finite = np.isfinite(values)
    low = float(values[finite].min()) if finite.any() else 0.0
    high = float(values[finite].max()) if finite.any() else 0.0
    span = high - low
    scaled = np.zeros(values.shape)
    if span > 0:
        scaled[finite] = (values[finite] - low) / span * PGM_MAXVAL
    pixels = np.flipud(np.rint(scaled)).astype(">u2")

    height, width = pixels.shape
    ensure_parent_exists(path)
    with open(path, "wb") as fo:
        fo.write(b"P5\n")
        fo.write(b"%i %i\n" % (width, height))
        fo.write(b"%i\n" % PGM_MAXVAL)
        fo.write(pixels.tobytes())
    with open(f"{path}.txt", "w", encoding="ascii", newline="\n") as fo:
        fo.write(f"min={low!r}\nmax={high!r}\n")
    logger.debug(f"Wrote {width}x{height} image to {path}")
    return low, high


def read_pgm(path: str) -> np.ndarray:
    """Pixels of a binary PGM written by write_pgm, top row first."""
    with open(path, "rb") as fi:
        magic = fi.readline().strip()
        width, height = (int(v) for v in fi.readline().split())
        maxval = int(fi.readline())
        if magic != b"P5" or maxval != PGM_MAXVAL:
            raise ConfigurationError(f"{path} is not a 16-bit binary PGM")
        return np.frombuffer(fi.read(2 * width * height), dtype=">u2").reshape(height, width)


def write_config_echo(prefix: str, config: RunConfig) -> str:
    path = f"{prefix}.config.txt"
    ensure_parent_exists(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fo:
        fo.write(config.render())
    return path


def write_report(path: str, values: Dict[str, Any]) -> str:
    """key=value lines in insertion order, floats with full precision."""
    ensure_parent_exists(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fo:
        for key, value in values.items():
            fo.write(f"{key}={FLOAT_FORMAT % value if isinstance(value, float) else value}\n")
    return path


def export_field(prefix: str, field: ScalarField) -> List[str]:
    """CSV of the field plus a PGM of the field (of its first-axis marginal on 2-dim grids)."""
    paths = [write_field_csv(f"{prefix}.csv", field)]
    pgm = f"{prefix}.pgm"
    write_pgm(pgm, marginal(field))
    paths.extend([pgm, f"{pgm}.txt"])
    return paths
