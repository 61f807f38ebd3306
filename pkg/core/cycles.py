"""Periodic Cycles Module.

This module finds periodic points of rational maps and organises them into
cycles with multipliers. Polynomial maps are handled through dynatomic
polynomials, either expanded (``dynatomic``) or seen only through their
logarithmic derivative along the orbit (``periodic_cycles``), which avoids
coefficient blow-up at higher periods. Rational maps solve f^n(z) = z in a
rotated chart. The quadratic family additionally gets hyperbolic centers
and Per_n(w) curves by Newton continuation.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.spatial import cKDTree

from core.exceptions import (
    ConfigurationError,
    ContinuationError,
    CycleGroupingError,
    NotDivisibleError,
    RootFindingError,
)
from core.family import FamilySpec
from core.maps import (
    RationalMapInstance,
    chordal_distance,
    from_chart,
    instantiate,
    lift_multiplier_factor,
    normalize,
    sphere_embedding,
    to_chart,
)
from core.polyalg import (
    PolyC,
    aberth,
    divide_exact,
    divisors,
    initial_circle,
    lift_apply,
    lift_jacobian,
    mobius,
    sort_complex,
)
from core.green import escape_radius

logger = logging.getLogger(__name__)

NEUTRAL_BAND = 1e-6
GROUPING_TOLERANCE = 1e-7
CENTER_RADIUS = 2.2
MAX_CENTER_PERIOD = 14
ACCEPT_STEP = 1e-8
_CHART_ROTATION = (0.3, 0.7)


class CycleClass(Enum):
    REPELLING = "repelling"
    ATTRACTING = "attracting"
    NEUTRAL = "neutral"

    @classmethod
    def of(cls, multiplier: complex) -> "CycleClass":
        modulus = abs(multiplier)
        if modulus > 1.0 + NEUTRAL_BAND:
            return cls.REPELLING
        if modulus < 1.0 - NEUTRAL_BAND:
            return cls.ATTRACTING
        return cls.NEUTRAL


@dataclass(frozen=True)
class DynatomicPoly:
    """Dynatomic polynomial Phi*_n with its degree nu_d(n)."""
    n: int
    poly: PolyC
    nu: int
    remainder_norm: float = 0.0


@dataclass(frozen=True)
class CycleRecord:
    """One n-cycle, represented by its (real, imaginary)-smallest point."""
    period: int
    point: complex
    lift: np.ndarray
    multiplier: complex
    cycle_class: CycleClass
    orbit: np.ndarray

    @property
    def at_infinity(self) -> bool:
        return not np.isfinite(self.point)


@dataclass(frozen=True)
class MultiplierSpectrum:
    params: np.ndarray
    n: int
    w_list: np.ndarray
    collision: bool = False


@dataclass(frozen=True)
class PeriodicPoints:
    """All points of Fix(f^n) with the multipliers of f^n there."""
    n: int
    lifts: np.ndarray
    multipliers: np.ndarray

    def chart(self) -> np.ndarray:
        return to_chart(self.lifts)


@dataclass(frozen=True)
class ContinuationResult:
    """Parameters reached by Per_n(w) continuation and the starts that failed.

    points holds, for each parameter, the point of its cycle reached by the
    continuation from z = 0.
    """
    parameters: np.ndarray
    failures: List[int]
    residuals: np.ndarray
    points: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))


# ---------------------------------------------------------------------------
# Counting
# ---------------------------------------------------------------------------

def nu(d: int, n: int) -> int:
    """nu_d(n) = sum_{k|n} mu(n/k) d^k, the number of points of exact period n in C."""
    return sum(mobius(n // k) * d ** k for k in divisors(n))


def cycle_count(d: int, n: int) -> int:
    """N_d(n) = nu_d(n)/n."""
    return nu(d, n) // n


def expected_cycle_count(m: RationalMapInstance, n: int) -> int:
    """Number of exact period-n cycles counted with multiplicity.

    Polynomial maps count cycles in C; rational maps count on the sphere,
    where the fixed points number d+1.
    """
    if m.is_polynomial or n > 1:
        return cycle_count(m.degree, n)
    return m.degree + 1


# ---------------------------------------------------------------------------
# Dynatomic polynomials
# ---------------------------------------------------------------------------

def dynatomic(m: RationalMapInstance, n: int, n_max: int = 10, tol: float = 1e-9) -> DynatomicPoly:
    """Phi*_n = prod_{k|n} (f^k(z) - z)^mu(n/k) by exact polynomial division.

    Raises:
        ConfigurationError: For non-polynomial maps or n outside [1, n_max].
        NotDivisibleError: If the division leaves a remainder (parabolic
            collision at this parameter); the error names n.
    """
    if not m.is_polynomial:
        raise ConfigurationError("Dynatomic polynomials are defined for polynomial maps only")
    if n < 1 or n > n_max:
        raise ConfigurationError(f"Period {n} outside [1, {n_max}]")

    identity = PolyC([0.0, 1.0])
    iterate = m.polynomial
    numerator = PolyC([1.0])
    denominator = PolyC([1.0])
    for k in range(1, n + 1):
        if n % k == 0:
            sign = mobius(n // k)
            if sign == 1:
                numerator = numerator * (iterate - identity)
            elif sign == -1:
                denominator = denominator * (iterate - identity)
        if k < n:
            iterate = m.polynomial.compose(iterate)

    try:
        result = divide_exact(numerator, denominator, tol)
    except NotDivisibleError as e:
        logger.error(f"Dynatomic division failed at period {n}: remainder {e.remainder_norm:.3e}")
        raise NotDivisibleError(f"Dynatomic polynomial of period {n} is not exact (parabolic collision?)",
                                e.remainder_norm, period=n)
    return DynatomicPoly(n=n, poly=result.quotient, nu=nu(m.degree, n), remainder_norm=result.remainder_norm)


# ---------------------------------------------------------------------------
# Orbit-evaluated logarithmic derivatives
# ---------------------------------------------------------------------------

def _orbit_terms(coeffs: np.ndarray, z: np.ndarray, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """((P^k)'(z) - 1)/(P^k(z) - z) for k = 1..n, and (P^n)'(z).

    Once an orbit exceeds 10^(250/d) it is frozen and the ratio
    (P^k)'/P^k is advanced by the factor d per step.
    """
    d = len(coeffs) - 1
    deriv = npoly.polyder(coeffs)
    big = 10.0 ** (250.0 / d)
    v = z.copy()
    D = np.ones_like(z)
    ratio = np.zeros_like(z)
    frozen = np.zeros(z.shape, dtype=bool)
    terms = np.empty((n,) + z.shape, dtype=complex)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for k in range(n):
            ratio[frozen] *= d
            live = ~frozen
            D[live] = npoly.polyval(v[live], deriv) * D[live]
            v[live] = npoly.polyval(v[live], coeffs)
            newly = live & (np.abs(v) > big)
            ratio[newly] = D[newly] / v[newly]
            frozen |= newly
            terms[k] = np.where(frozen, ratio, (D - 1.0) / (v - z))
    return terms, D


def _dynatomic_log_derivative(coeffs: np.ndarray, n: int):
    weights = [(k, mobius(n // k)) for k in divisors(n) if mobius(n // k) != 0]

    def log_derivative(z: np.ndarray) -> np.ndarray:
        terms, _ = _orbit_terms(coeffs, z, n)
        return sum(sign * terms[k - 1] for k, sign in weights)

    return log_derivative


def _solve(log_derivative, start: np.ndarray, label: str, root_tol: float = ACCEPT_STEP,
           max_iter: int = 500) -> np.ndarray:
    """Roots by Aberth iteration; unfrozen roots are accepted while their last relative step is within root_tol."""
    result = aberth(log_derivative, start, step_tol=1e-13, max_iter=max_iter)
    if not np.all(result.converged):
        lagging = result.last_step[~result.converged]
        scale = 1.0 + np.abs(result.roots[~result.converged])
        residual = float(np.max(lagging / scale))
        if not np.isfinite(residual) or residual > root_tol:
            logger.error(f"{label}: {int(np.sum(~result.converged))} roots unconverged, step {residual:.3e}")
            raise RootFindingError(f"{label}: simultaneous iteration did not converge", residual)
    return result.roots


def dynatomic_roots(m: RationalMapInstance, n: int, root_tol: float = ACCEPT_STEP) -> np.ndarray:
    """Zeros of Phi*_n for a polynomial map, without expanding Phi*_n."""
    coeffs = np.asarray(m.polynomial.coeffs)
    radius = 1.05 * float(escape_radius(coeffs))
    count = nu(m.degree, n)
    start = initial_circle(count, radius)
    return _solve(_dynatomic_log_derivative(coeffs, n), start, f"period-{n} points", root_tol)


# ---------------------------------------------------------------------------
# Fixed points of iterates
# ---------------------------------------------------------------------------

def _rotation() -> np.ndarray:
    theta, phi = _CHART_ROTATION
    return np.array([[math.cos(theta), -np.exp(-1j * phi) * math.sin(theta)],
                     [np.exp(1j * phi) * math.sin(theta), math.cos(theta)]])


def _rotated_fix_log_derivative(a: np.ndarray, b: np.ndarray, n: int):
    """E'/E for E(t) = y1 - t y2, y = R^H F^n(R (t, 1))."""
    rotation = _rotation()
    inverse = rotation.conj().T

    def log_derivative(t: np.ndarray) -> np.ndarray:
        x = np.stack([t, np.ones_like(t)], axis=-1) @ rotation.T
        dx = np.broadcast_to(rotation[:, 0], x.shape).copy()
        for _ in range(n):
            jac = lift_jacobian(a, b, x)
            dx = np.einsum("...ij,...j->...i", jac, dx)
            x = lift_apply(a, b, x)
            scale = np.linalg.norm(x, axis=-1, keepdims=True)
            x = x / scale
            dx = dx / scale
        y = x @ inverse.T
        dy = dx @ inverse.T
        return (dy[:, 0] - y[:, 1] - t * dy[:, 1]) / (y[:, 0] - t * y[:, 1])

    return log_derivative


def orbit_multiplier(a: np.ndarray, b: np.ndarray, p: np.ndarray, n: int) -> np.ndarray:
    """Multiplier of f^n at fixed points p of f^n (unit lifts, batched).

    Uses the chain of unit lifts u_{j+1} = F(u_j)/||F(u_j)||, closing the
    cycle on p itself.
    """
    u = normalize(p)
    start = u
    product = np.ones(u.shape[:-1], dtype=complex)
    for j in range(n):
        image = lift_apply(a, b, u)
        following = start if j == n - 1 else normalize(image)
        product = product * lift_multiplier_factor(a, b, u, following)
        u = following
    return product


def fixed_points_of_iterate(m: RationalMapInstance, n: int, root_tol: float = ACCEPT_STEP) -> PeriodicPoints:
    """All points of Fix(f^n) with the multipliers of f^n.

    Polynomial maps return the d^n finite fixed points (the superattracting
    point at infinity is left out); rational maps return all d^n + 1.
    """
    if n < 1:
        raise ConfigurationError(f"Period must be positive, got {n}")
    d = m.degree
    if m.is_polynomial:
        coeffs = np.asarray(m.polynomial.coeffs)
        start = initial_circle(d ** n, 1.05 * float(escape_radius(coeffs)))

        def log_derivative(z):
            terms, _ = _orbit_terms(coeffs, z, n)
            return terms[n - 1]

        points = _solve(log_derivative, start, f"Fix(f^{n})", root_tol)
        _, multipliers = _orbit_terms(coeffs, points, n)
        return PeriodicPoints(n=n, lifts=from_chart(points), multipliers=multipliers)

    a, b = np.asarray(m.lift.a), np.asarray(m.lift.b)
    t = _solve(_rotated_fix_log_derivative(a, b, n), initial_circle(d ** n + 1, 1.0), f"Fix(f^{n})", root_tol)
    lifts = normalize(np.stack([t, np.ones_like(t)], axis=-1) @ _rotation().T)
    return PeriodicPoints(n=n, lifts=lifts, multipliers=orbit_multiplier(a, b, lifts, n))


# ---------------------------------------------------------------------------
# Cycle grouping
# ---------------------------------------------------------------------------

def _exact_period_mask(m: RationalMapInstance, lifts: np.ndarray, n: int, tol: float) -> np.ndarray:
    proper = [k for k in divisors(n) if k < n]
    exact = np.ones(len(lifts), dtype=bool)
    u = lifts
    for k in range(1, n):
        u = normalize(m.apply(u))
        if k in proper:
            exact &= chordal_distance(u, lifts) >= tol
    return exact


def group_cycles(lifts: np.ndarray, images: np.ndarray, n: int, tol: float = GROUPING_TOLERANCE,
                 parameter=None) -> List[np.ndarray]:
    """Split period-n points into cycles by matching each image to its nearest point.

    Returns:
        List[np.ndarray]: Index arrays, each in orbit order.

    Raises:
        CycleGroupingError: If an image has no match within tol, two
            candidates within tol, or the matching is not a union of n-cycles.
    """
    count = len(lifts)
    if count == 0:
        return []
    tree = cKDTree(sphere_embedding(lifts))
    k = min(2, count)
    dist, idx = tree.query(sphere_embedding(images), k=k)
    dist = np.reshape(dist, (count, k))
    idx = np.reshape(idx, (count, k))
    if np.any(dist[:, 0] > tol):
        raise CycleGroupingError(f"Period-{n} point without a matching image (gap {np.max(dist[:, 0]):.2e})",
                                 parameter=parameter, period=n)
    if k == 2 and np.any(dist[:, 1] <= tol):
        raise CycleGroupingError(f"Ambiguous period-{n} orbit matching; parameter is near-parabolic",
                                 parameter=parameter, period=n)
    successor = idx[:, 0]
    if len(np.unique(successor)) != count:
        raise CycleGroupingError(f"Period-{n} image matching is not a permutation", parameter=parameter, period=n)

    cycles = []
    seen = np.zeros(count, dtype=bool)
    for first in range(count):
        if seen[first]:
            continue
        members = [first]
        seen[first] = True
        current = successor[first]
        while current != first:
            members.append(current)
            seen[current] = True
            current = successor[current]
        if len(members) != n:
            raise CycleGroupingError(f"Found a cycle of length {len(members)} among period-{n} points",
                                     parameter=parameter, period=n)
        cycles.append(np.array(members))
    return cycles


def _representative(points: np.ndarray) -> int:
    finite = np.where(np.isfinite(points), points, complex(np.inf, np.inf))
    return int(np.lexsort((finite.imag, finite.real))[0])


def periodic_cycles(m: RationalMapInstance, n: int, tol: float = GROUPING_TOLERANCE,
                    root_tol: float = ACCEPT_STEP) -> List[CycleRecord]:
    """Cycles of exact period n, one record per cycle, sorted by representative.

    Polynomial maps find the zeros of Phi*_n along the orbit; multipliers
    are prod P'(z_j). Rational maps take Fix(f^n), keep the exact-period
    points and use the lift formula prod det F'(p_j)/(d lambda_j^2).
    """
    if n < 1:
        raise ConfigurationError(f"Period must be positive, got {n}")
    if m.is_polynomial:
        points = dynatomic_roots(m, n, root_tol)
        lifts = from_chart(points)
        images = from_chart(m.polynomial(points))
    else:
        fixed = fixed_points_of_iterate(m, n, root_tol)
        lifts = fixed.lifts[_exact_period_mask(m, fixed.lifts, n, tol)]
        images = normalize(m.apply(lifts))
    chart = to_chart(lifts)

    records = []
    for members in group_cycles(lifts, images, n, tol, parameter=m.params):
        members = np.roll(members, -_representative(chart[members]))
        if m.is_polynomial:
            multiplier = complex(np.prod(m.polynomial.derivative()(chart[members])))
        else:
            cycle = lifts[members]
            following = np.roll(cycle, -1, axis=0)
            multiplier = complex(np.prod(lift_multiplier_factor(m.lift.a, m.lift.b, cycle, following)))
        records.append(CycleRecord(
            period=n,
            point=complex(chart[members[0]]),
            lift=lifts[members[0]],
            multiplier=multiplier,
            cycle_class=CycleClass.of(multiplier),
            orbit=chart[members],
        ))
    records.sort(key=lambda r: (r.point.real, r.point.imag))
    logger.debug(f"Period {n}: {len(records)} cycles")
    return records


def multiplier_spectrum(family: Union[FamilySpec, str], params, n: int,
                        tol: float = GROUPING_TOLERANCE, root_tol: float = ACCEPT_STEP) -> MultiplierSpectrum:
    """Multipliers of the exact period-n cycles, sorted by (real, imaginary)."""
    m = instantiate(family, params)
    records = periodic_cycles(m, n, tol, root_tol)
    w_list = sort_complex([r.multiplier for r in records])
    collision = len(w_list) != expected_cycle_count(m, n)
    if collision:
        logger.warning(f"Period-{n} spectrum at {m.params} has {len(w_list)} cycles, "
                       f"expected {expected_cycle_count(m, n)}")
    return MultiplierSpectrum(params=m.params, n=n, w_list=w_list, collision=collision)


def lyap_spectrum_average(family: Union[FamilySpec, str], params, n: int) -> float:
    """d^-n sum of ln|w| over repelling exact period-n cycles."""
    m = instantiate(family, params)
    records = periodic_cycles(m, n)
    total = sum(math.log(abs(r.multiplier)) for r in records if r.cycle_class is CycleClass.REPELLING)
    return total / m.degree ** n


def cycle_table(records: Sequence[CycleRecord]) -> Tuple[np.ndarray, List[str]]:
    """Numeric columns n, re_z, im_z, re_w, im_w and the class labels."""
    rows = np.array([[r.period, r.point.real, r.point.imag, r.multiplier.real, r.multiplier.imag]
                     for r in records], dtype=float).reshape(-1, 5)
    return rows, [r.cycle_class.value for r in records]


# ---------------------------------------------------------------------------
# Quadratic family: centers and Per_n(w)
# ---------------------------------------------------------------------------

def _center_log_derivative(n: int):
    """sum_{k|n} mu(n/k) G_k'/G_k with G_k(c) = P_c^k(0)."""
    weights = [(k, mobius(n // k)) for k in divisors(n) if mobius(n // k) != 0]
    big = 10.0 ** 125

    def log_derivative(c: np.ndarray) -> np.ndarray:
        v = c.copy()
        D = np.ones_like(c)
        ratio = np.zeros_like(c)
        frozen = np.zeros(c.shape, dtype=bool)
        total = np.zeros_like(c)
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            for k in range(1, n + 1):
                if k > 1:
                    ratio[frozen] *= 2.0
                    live = ~frozen
                    D[live] = 2.0 * v[live] * D[live] + 1.0
                    v[live] = v[live] ** 2 + c[live]
                newly = ~frozen & (np.abs(v) > big)
                ratio[newly] = D[newly] / v[newly]
                frozen |= newly
                for kk, sign in weights:
                    if kk == k:
                        total = total + sign * np.where(frozen, ratio, D / v)
        return total

    return log_derivative


def per_n_centers(n: int, root_tol: float = ACCEPT_STEP) -> np.ndarray:
    """Centers of the hyperbolic components of period n of the Mandelbrot set."""
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1 or n > MAX_CENTER_PERIOD:
        raise ConfigurationError(f"Center period must be in [1, {MAX_CENTER_PERIOD}], got {n!r}")
    count = nu(2, n) // 2
    if n == 1:
        return np.zeros(1, dtype=complex)
    start = initial_circle(count, CENTER_RADIUS)
    centers = _solve(_center_log_derivative(n), start, f"period-{n} centers", root_tol)
    return sort_complex(centers)


def _quadratic_jets(z: np.ndarray, c: np.ndarray, n: int):
    """f^n(z) - z, (f^n)'(z) and their partial derivatives in (z, c)."""
    v = z.copy()
    vz = np.ones_like(z)
    vc = np.zeros_like(z)
    w = np.ones_like(z)
    wz = np.zeros_like(z)
    wc = np.zeros_like(z)
    for _ in range(n):
        w, wz, wc = 2.0 * v * w, 2.0 * (vz * w + v * wz), 2.0 * (vc * w + v * wc)
        v, vz, vc = v * v + c, 2.0 * v * vz, 2.0 * v * vc + 1.0
    return v - z, vz - 1.0, vc, w, wz, wc


def per_n_w(n: int, w: complex, steps: int = 32, newton_iter: int = 20,
            centers: Optional[np.ndarray] = None, root_tol: float = ACCEPT_STEP) -> ContinuationResult:
    """Parameters c of z^2 + c with an exact period-n cycle of multiplier w.

    Starting at every period-n center (where z = 0 lies on a cycle of
    multiplier 0), Newton's method in (z, c) on f^n(z) = z, (f^n)'(z) = w_s
    follows w_s = w s/steps for s = 1..steps.

    Returns:
        ContinuationResult: reached parameters (sorted), indices of the
        centers whose continuation failed, and the multiplier residuals
        |(f^n)'(z) - w| at the reached points.

    Raises:
        ContinuationError: If every start fails.
    """
    if n < 1 or n > 10:
        raise ConfigurationError(f"Per_n(w) period must be in [1, 10], got {n}")
    if steps < 1:
        raise ConfigurationError(f"Continuation needs at least one step, got {steps}")
    w = complex(w)
    c = np.array(per_n_centers(n, root_tol) if centers is None else centers, dtype=complex)
    z = np.zeros_like(c)
    alive = np.ones(c.shape, dtype=bool)

    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for s in range(1, steps + 1):
            target = w * s / steps
            converged = np.zeros(c.shape, dtype=bool)
            for _ in range(newton_iter):
                rows = alive & ~converged
                if not np.any(rows):
                    break
                f1, f1z, f1c, a, az, ac = _quadratic_jets(z[rows], c[rows], n)
                f2 = a - target
                det = f1z * ac - f1c * az
                dz = (f1 * ac - f1c * f2) / det
                dc = (f1z * f2 - f1 * az) / det
                bad = ~(np.isfinite(dz) & np.isfinite(dc))
                idx = np.flatnonzero(rows)
                alive[idx[bad]] = False
                z[idx] -= np.where(bad, 0.0, dz)
                c[idx] -= np.where(bad, 0.0, dc)
                small = np.abs(dz) + np.abs(dc) <= 1e-13 * (1.0 + np.abs(z[idx]) + np.abs(c[idx]))
                converged[idx[small & ~bad]] = True
            alive &= converged

    failures = [int(i) for i in np.flatnonzero(~alive)]
    if not np.any(alive):
        logger.error(f"Per_{n}({w}) continuation failed for all {len(c)} starts")
        raise ContinuationError(f"Per_{n}({w}) continuation diverged for every start", failures)
    if failures:
        logger.warning(f"Per_{n}({w}) continuation failed for {len(failures)} of {len(c)} starts")
    _, _, _, a, _, _ = _quadratic_jets(z[alive], c[alive], n)
    order = np.lexsort((c[alive].imag, c[alive].real))
    return ContinuationResult(
        parameters=c[alive][order],
        failures=failures,
        residuals=np.abs(a - w)[order],
        points=z[alive][order],
    )


def _quadratic_orbit(c: complex, z: complex, n: int) -> Tuple[np.ndarray, complex]:
    """z, f_c(z), ..., f_c^n(z) and the product of P_c' over the first n points."""
    p = instantiate("quadratic", [c]).polynomial
    dp = p.derivative()
    orbit = [complex(z)]
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(n):
            orbit.append(complex(p(orbit[-1])))
        multiplier = complex(np.prod([complex(dp(x)) for x in orbit[:-1]]))
    return np.array(orbit), multiplier


def _continuation_pairs(parameters: np.ndarray, points: np.ndarray):
    parameters = np.asarray(parameters, dtype=complex).ravel()
    points = np.asarray(points, dtype=complex).ravel()
    if parameters.shape != points.shape:
        raise ConfigurationError(f"{parameters.size} parameter(s) but {points.size} cycle point(s)")
    return zip(parameters, points)


def cycle_residuals(parameters: np.ndarray, points: np.ndarray, n: int, w: complex) -> np.ndarray:
    """max(|f_c^n(z) - z|, |(f_c^n)'(z) - w|) for every pair (c, z).

    Only (c, z) is used; each orbit runs under the instantiated map.
    """
    residuals = []
    for c, z in _continuation_pairs(parameters, points):
        orbit, multiplier = _quadratic_orbit(c, z, n)
        residuals.append(max(abs(orbit[-1] - orbit[0]), abs(multiplier - complex(w))))
    residuals = np.array(residuals, dtype=float)
    return np.where(np.isfinite(residuals), residuals, np.inf)


def continuation_cycles(result: ContinuationResult, n: int) -> List[CycleRecord]:
    """The cycle through each continued point, in the order of result.parameters."""
    records = []
    for c, z in _continuation_pairs(result.parameters, result.points):
        orbit, multiplier = _quadratic_orbit(c, z, n)
        members = np.roll(orbit[:-1], -_representative(orbit[:-1]))
        records.append(CycleRecord(
            period=n,
            point=complex(members[0]),
            lift=from_chart(members[:1])[0],
            multiplier=multiplier,
            cycle_class=CycleClass.of(multiplier),
            orbit=members,
        ))
    return records
