"""Green Functions Module.

This module evaluates Green functions of lifts, G_F = lim d^-n ln ||F^n||,
and of polynomials, g = lim d^-n ln+ |P^n|, with explicit tail bounds, and
samples the Green measure of a rational map by random backward iteration.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import partial
from typing import Optional, Union

import numpy as np

from core.exceptions import ConfigurationError, DegenerateMapError
from core.family import FamilySpec, create_family
from core.maps import (
    RationalMapInstance,
    chordal_distance,
    fixed_point_multipliers,
    from_chart,
    normalize,
    spherical_derivative,
    to_chart,
)
from core.polyalg import binary_form_roots, lift_apply
from utils.parallel import chunk_ranges, ordered_map, stream

logger = logging.getLogger(__name__)

DISTORTION_SAMPLES = 1024
BATCH_DISTORTION_SAMPLES = 256
DISTORTION_INFLATION = 1.5
PERIODICITY_TOLERANCE = 1e-12
CHAINS_PER_TASK = 25


class GreenStatus(Enum):
    """How a Green value was obtained."""
    CONVERGED = 0
    ESCAPED = 1
    BOUNDED = 2
    UNDECIDED = 3


@dataclass(frozen=True)
class GreenValue:
    value: float
    iterations: int
    error_bound: float
    status: GreenStatus = GreenStatus.CONVERGED
    max_modulus: float = 0.0


@dataclass(frozen=True)
class GreenBatch:
    """Arrays of Green values for a batch of orbits."""
    values: np.ndarray
    iterations: np.ndarray
    error_bounds: np.ndarray
    status: np.ndarray
    max_modulus: np.ndarray

    @property
    def undecided(self) -> np.ndarray:
        return self.status == GreenStatus.UNDECIDED.value


@dataclass(frozen=True)
class SampleCloud:
    """Unit-norm lifts sampled from a Green measure, with their chain indices."""
    points: np.ndarray
    chain_ids: np.ndarray

    def __post_init__(self):
        if len(self.points) == 0:
            raise ConfigurationError("A sample cloud cannot be empty")

    def __len__(self) -> int:
        return len(self.points)

    @property
    def weights(self) -> np.ndarray:
        return np.full(len(self.points), 1.0 / len(self.points))

    def chart(self) -> np.ndarray:
        """Affine coordinates of the samples."""
        return to_chart(self.points)


# ---------------------------------------------------------------------------
# Green function of a lift
# ---------------------------------------------------------------------------

def sphere_sample(n: int) -> np.ndarray:
    """n unit lifts spread evenly over the Riemann sphere (Fibonacci lattice)."""
    k = np.arange(n)
    height = 1.0 - (2.0 * k + 1.0) / n
    theta = np.arccos(height)
    phi = k * math.pi * (3.0 - math.sqrt(5.0))
    return np.stack([np.cos(theta / 2.0) + 0j, np.sin(theta / 2.0) * np.exp(1j * phi)], axis=-1)


def distortion_constant(a: np.ndarray, b: np.ndarray, samples: int = DISTORTION_SAMPLES) -> np.ndarray:
    """M with M^-1 <= ||F(u)|| <= M on the unit sphere, from a sample inflated by 1.5."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    u = sphere_sample(samples)
    norms = np.linalg.norm(lift_apply(a[..., None, :], b[..., None, :], u), axis=-1)
    if np.any(norms == 0):
        raise DegenerateMapError("Lift vanishes on the unit sphere")
    spread = np.maximum(norms, 1.0 / norms).max(axis=-1)
    return DISTORTION_INFLATION * spread


def tail_iterations(log_m, d: int, tol: float) -> np.ndarray:
    """Smallest n >= 1 with ln M / (d^n (d - 1)) <= tol."""
    needed = np.ceil(np.log(np.asarray(log_m) / (tol * (d - 1))) / math.log(d))
    return np.maximum(1, needed).astype(int)


def green_lift_batch(a: np.ndarray, b: np.ndarray, z: np.ndarray, tol: float = 1e-10,
                     samples: int = BATCH_DISTORTION_SAMPLES) -> GreenBatch:
    """G_F for a batch of lifts and points.

    Args:
        a, b: Lift coefficients, shape (..., d+1).
        z: Nonzero points of C^2, shape (..., 2).
        tol: Target accuracy.
        samples: Sphere sample size for the distortion constant.

    Returns:
        GreenBatch: values with tail bounds; all rows use the largest
        iteration count any row needs.
    """
    if tol <= 0:
        raise ConfigurationError(f"Green tolerance must be positive, got {tol}")
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    z = np.asarray(z, dtype=complex)
    d = a.shape[-1] - 1
    log_m = np.log(distortion_constant(a, b, samples))
    steps = int(np.max(tail_iterations(log_m, d, tol)))

    norm = np.linalg.norm(z, axis=-1)
    if np.any(norm == 0):
        raise ConfigurationError("Green function of a lift is undefined at the origin")
    value = np.log(norm)
    u = z / norm[..., None]
    for k in range(1, steps + 1):
        image = lift_apply(a, b, u)
        r = np.linalg.norm(image, axis=-1)
        if not np.all(np.isfinite(r)) or np.any(r == 0):
            logger.error(f"Non-finite lift iterate at step {k}")
            raise DegenerateMapError(f"Non-finite or vanishing lift iterate at step {k}")
        value = value + np.log(r) / float(d) ** k
        u = image / r[..., None]

    shape = value.shape
    bounds = log_m / (float(d) ** steps * (d - 1)) * np.ones(shape)
    return GreenBatch(
        values=value,
        iterations=np.full(shape, steps),
        error_bounds=bounds,
        status=np.full(shape, GreenStatus.CONVERGED.value),
        max_modulus=np.zeros(shape),
    )


def green_lift(m: RationalMapInstance, z, tol: float = 1e-10) -> GreenValue:
    """G_F(z) within tol using per-step renormalisation of the orbit."""
    batch = green_lift_batch(m.lift.a, m.lift.b, np.asarray(z, dtype=complex), tol, DISTORTION_SAMPLES)
    return GreenValue(float(batch.values), int(batch.iterations), float(batch.error_bounds))


# ---------------------------------------------------------------------------
# Green function of a polynomial
# ---------------------------------------------------------------------------

def escape_radius(coeffs: np.ndarray) -> np.ndarray:
    """R beyond which |P(z)| >= 2|z|: max(1, 2S, (4/|a_d|)^(1/(d-1))), S = sum_{k<d} |a_k|/|a_d|."""
    coeffs = np.asarray(coeffs, dtype=complex)
    d = coeffs.shape[-1] - 1
    lead = np.abs(coeffs[..., -1])
    spread = np.sum(np.abs(coeffs[..., :-1]), axis=-1) / lead
    return np.maximum(np.maximum(1.0, 2.0 * spread), (4.0 / lead) ** (1.0 / (d - 1)))


def green_poly_batch(coeffs: np.ndarray, z: np.ndarray, tol: float = 1e-10,
                     max_iter: int = 4096) -> GreenBatch:
    """g(z) for a batch of polynomials (ascending coefficients) and points.

    Escaping orbits are followed until 2S / ((d-1) d^n |z_n|) <= tol and
    valued d^-n (ln|z_n| + ln|a_d|/(d-1)). Orbits caught by periodicity
    checking are BOUNDED with value 0; orbits that neither escape nor repeat
    within max_iter are UNDECIDED with value 0.
    """
    coeffs = np.asarray(coeffs, dtype=complex)
    z = np.asarray(z, dtype=complex)
    batch_shape = np.broadcast_shapes(coeffs.shape[:-1], z.shape)
    d = coeffs.shape[-1] - 1
    coeffs = np.broadcast_to(coeffs, batch_shape + (d + 1,)).reshape(-1, d + 1)
    orbit = np.broadcast_to(z, batch_shape).reshape(-1).copy()
    count = orbit.size

    lead = np.abs(coeffs[:, -1])
    spread = np.sum(np.abs(coeffs[:, :-1]), axis=1) / lead
    radius = escape_radius(coeffs)
    log_lead = np.log(lead) / (d - 1)
    cap = 10.0 ** (250.0 / d)

    values = np.zeros(count)
    iterations = np.zeros(count, dtype=int)
    bounds = np.zeros(count)
    status = np.full(count, GreenStatus.UNDECIDED.value)
    max_modulus = np.abs(orbit)
    saved = orbit.copy()
    next_save = 1
    active = np.arange(count)

    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        for n in range(max_iter + 1):
            modulus = np.abs(orbit[active])
            escaping = modulus > radius[active]
            scale = np.float64(d) ** n
            tail = 2.0 * spread[active] / ((d - 1) * scale * modulus)
            finished = escaping & ((tail <= tol) | (modulus > cap))
            periodic = ~escaping & (n > 0) & (
                np.abs(orbit[active] - saved[active]) <= PERIODICITY_TOLERANCE * (1.0 + np.abs(saved[active])))

            rows = active[finished]
            values[rows] = (np.log(modulus[finished]) + log_lead[rows]) / scale
            bounds[rows] = tail[finished]
            iterations[rows] = n
            status[rows] = GreenStatus.ESCAPED.value

            rows = active[periodic]
            iterations[rows] = n
            status[rows] = GreenStatus.BOUNDED.value

            active = active[~(finished | periodic)]
            if active.size == 0 or n == max_iter:
                break
            if n == next_save:
                saved[active] = orbit[active]
                next_save *= 2

            w = orbit[active]
            acc = coeffs[active, d].copy()
            for k in range(d - 1, -1, -1):
                acc = acc * w + coeffs[active, k]
            orbit[active] = acc
            max_modulus[active] = np.maximum(max_modulus[active], np.abs(acc))

    # escaping orbits cut off by max_iter keep their current estimate
    if active.size:
        modulus = np.abs(orbit[active])
        escaping = modulus > radius[active]
        rows = active[escaping]
        scale = np.float64(d) ** max_iter
        values[rows] = (np.log(modulus[escaping]) + log_lead[rows]) / scale
        bounds[rows] = 2.0 * spread[rows] / ((d - 1) * scale * modulus[escaping])
        status[rows] = GreenStatus.ESCAPED.value
        iterations[active] = max_iter
        undecided = active[~escaping]
        if undecided.size:
            logger.debug(f"{undecided.size} orbit(s) undecided after {max_iter} iterations")

    return GreenBatch(
        values=values.reshape(batch_shape),
        iterations=iterations.reshape(batch_shape),
        error_bounds=bounds.reshape(batch_shape),
        status=status.reshape(batch_shape),
        max_modulus=max_modulus.reshape(batch_shape),
    )


def green_poly(family: Union[FamilySpec, str], params, z: complex, tol: float = 1e-10,
               max_iter: int = 4096) -> GreenValue:
    """Green function of a polynomial family member at z.

    Raises:
        ConfigurationError: If the family is not polynomial.
    """
    adapter = create_family(family)
    coeffs = adapter.polynomial_coefficients(adapter.validate_params(params))
    batch = green_poly_batch(coeffs, complex(z), tol, max_iter)
    return _single(batch)


def green_polynomial(coeffs: np.ndarray, z: complex, tol: float = 1e-10, max_iter: int = 4096) -> GreenValue:
    """Green function of the polynomial with the given ascending coefficients."""
    return _single(green_poly_batch(np.asarray(coeffs, dtype=complex), complex(z), tol, max_iter))


def _single(batch: GreenBatch) -> GreenValue:
    status = GreenStatus(int(batch.status))
    if status is GreenStatus.UNDECIDED:
        logger.warning(f"Green value undecided after {int(batch.iterations)} iterations "
                       f"(max modulus {float(batch.max_modulus):.3e})")
    return GreenValue(
        value=float(batch.values),
        iterations=int(batch.iterations),
        error_bound=float(batch.error_bounds),
        status=status,
        max_modulus=float(batch.max_modulus),
    )


# ---------------------------------------------------------------------------
# Green measure sampling
# ---------------------------------------------------------------------------

def default_start(m: RationalMapInstance) -> np.ndarray:
    """The fixed point of largest multiplier modulus; it lies in the Julia set."""
    spectrum = fixed_point_multipliers(m)
    return spectrum.fixed_points[int(np.argmax(np.abs(spectrum.multipliers)))]


def check_start(m: RationalMapInstance, start: np.ndarray) -> None:
    """Reject a superattracting fixed point as the root of backward orbits."""
    image = normalize(m.apply(start))
    if chordal_distance(image, start) < 1e-10 and spherical_derivative(m, start) < 1e-12:
        raise ConfigurationError(f"Start point {to_chart(start)} is exceptional (superattracting fixed point)")


def sample_green_measure(m: RationalMapInstance, n_samples: int, burn_in: int = 64, seed: int = 0,
                         start=None, n_chains: Optional[int] = None, stride: int = 1,
                         workers: int = 1) -> SampleCloud:
    """Sample the Green measure by random backward iteration.

    Each chain starts at the same point and at every step moves to one of
    the d preimages of its current point, chosen uniformly by its own Philox
    stream. After burn_in steps every stride-th point is kept. Samples are
    ordered by (chain, step).

    Args:
        m: The map.
        n_samples: Number of retained samples.
        burn_in: Discarded steps per chain.
        seed: Seed of the per-chain streams.
        start: Start point as a lift or a complex chart value; defaults to
            the most repelling fixed point.
        n_chains: Number of chains (default min(n_samples, 100)).
        stride: Thinning between retained samples.
        workers: Worker processes.

    Returns:
        SampleCloud: n_samples unit lifts.
    """
    if n_samples < 1 or burn_in < 0 or stride < 1:
        raise ConfigurationError(
            f"Invalid sampling request: n_samples={n_samples}, burn_in={burn_in}, stride={stride}")
    if start is None:
        start = default_start(m)
    elif np.ndim(start) == 0:
        start = from_chart(complex(start))
    else:
        start = normalize(np.asarray(start, dtype=complex))
    check_start(m, start)

    n_chains = min(n_samples, 100) if n_chains is None else int(n_chains)
    if n_chains < 1:
        raise ConfigurationError(f"Number of chains must be positive, got {n_chains}")
    per_chain = -(-n_samples // n_chains)
    run = partial(_run_chains, a=m.lift.a, b=m.lift.b, start=start, seed=seed,
                  burn_in=burn_in, per_chain=per_chain, stride=stride)
    blocks = [np.arange(n_chains)[s] for s in chunk_ranges(n_chains, CHAINS_PER_TASK)]
    results = ordered_map(run, blocks, workers)

    points = np.concatenate(results, axis=0).reshape(-1, 2)[:n_samples]
    chain_ids = np.repeat(np.arange(n_chains), per_chain)[:n_samples]
    logger.info(f"Sampled {n_samples} points from {n_chains} chains (burn-in {burn_in}, stride {stride})")
    return SampleCloud(points=points, chain_ids=chain_ids)


def _run_chains(chains: np.ndarray, a: np.ndarray, b: np.ndarray, start: np.ndarray, seed: int,
                burn_in: int, per_chain: int, stride: int) -> np.ndarray:
    d = len(a) - 1
    steps = burn_in + per_chain * stride
    choices = np.stack([stream(seed, c).integers(0, d, size=steps) for c in chains])
    current = np.tile(start, (len(chains), 1))
    kept = np.empty((len(chains), per_chain, 2), dtype=complex)
    rows = np.arange(len(chains))
    slot = 0
    for step in range(steps):
        form = current[:, 1, None] * a[None, :] - current[:, 0, None] * b[None, :]
        preimages = binary_form_roots(form)
        current = preimages[rows, choices[:, step]]
        if step >= burn_in and (step - burn_in + 1) % stride == 0:
            kept[:, slot] = current
            slot += 1
    return kept
