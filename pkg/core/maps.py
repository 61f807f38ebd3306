"""Rational Map Instances Module.

This module turns a family and a parameter point into a concrete rational
map: its homogeneous lift, the lifted critical points in the factored form
det F'(z) = prod_j (c_j ^ z), fixed-point multipliers and the chart-free
spherical derivative. It also holds the small sphere-geometry helpers shared
by the dynamical modules.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

from core.exceptions import ConfigurationError, DegenerateMapError
from core.family import FamilySpec, create_family
from core.polyalg import (
    HomPair,
    PolyC,
    binary_form_roots,
    form_from_lifts,
    jacobian_form,
    lift_apply,
    lift_jacobian_det,
    resultant,
)

logger = logging.getLogger(__name__)

_MULTIPLE_FIXED_POINT = 1e-6


@dataclass(frozen=True)
class RationalMapInstance:
    """A rational map of one family at one parameter point."""
    lift: HomPair
    critical_lifts: np.ndarray
    spec: Optional[FamilySpec] = None
    params: Optional[np.ndarray] = None
    polynomial: Optional[PolyC] = None

    @property
    def degree(self) -> int:
        return self.lift.degree

    @property
    def is_polynomial(self) -> bool:
        return self.polynomial is not None

    def apply(self, z: np.ndarray) -> np.ndarray:
        return lift_apply(self.lift.a, self.lift.b, z)

    def marked_critical_points(self) -> np.ndarray:
        """Finite marked critical points of a polynomial family member."""
        if self.spec is None or not self.is_polynomial:
            raise ConfigurationError("Marked critical points exist only for polynomial families")
        return create_family(self.spec).critical_points(self.params)


@dataclass(frozen=True)
class FixedPointSpectrum:
    """Fixed points (unit lifts) and their multipliers, sorted by multiplier."""
    multipliers: np.ndarray
    fixed_points: np.ndarray
    multiple: bool


def normalize(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    return z / np.linalg.norm(z, axis=-1, keepdims=True)


def sphere_embedding(z: np.ndarray) -> np.ndarray:
    """Point of the unit sphere in R^3 for each lift (stereographic picture)."""
    z = np.asarray(z, dtype=complex)
    z1, z2 = z[..., 0], z[..., 1]
    norm2 = np.abs(z1) ** 2 + np.abs(z2) ** 2
    cross = z1 * np.conj(z2)
    return np.stack([2 * cross.real, 2 * cross.imag, np.abs(z1) ** 2 - np.abs(z2) ** 2], axis=-1) / norm2[..., None]


def chordal_distance(z: np.ndarray, w: np.ndarray) -> np.ndarray:
    return np.linalg.norm(sphere_embedding(z) - sphere_embedding(w), axis=-1)


def to_chart(z: np.ndarray) -> np.ndarray:
    """Affine coordinate z1/z2, infinite where z2 vanishes."""
    z = np.asarray(z, dtype=complex)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = z[..., 0] / z[..., 1]
    return np.where(z[..., 1] == 0, complex(np.inf, 0.0), t)


def from_chart(t) -> np.ndarray:
    t = np.asarray(t, dtype=complex)
    return normalize(np.stack([t, np.ones_like(t)], axis=-1))


def instantiate(family: Union[FamilySpec, str], params) -> RationalMapInstance:
    """Build the rational map of a family at a parameter point.

    Args:
        family: FamilySpec or its textual form.
        params: Parameter point with parameter_dimension complex entries.

    Returns:
        RationalMapInstance: The map with its factored critical lifts.

    Raises:
        ConfigurationError: For non-finite or mis-shaped parameters.
        DegenerateMapError: If the lift has vanishing resultant.
    """
    adapter = create_family(family)
    point = adapter.validate_params(params)
    if point.ndim != 1:
        raise ConfigurationError(f"instantiate() takes a single parameter point, got shape {point.shape}")
    batch = point[None, :]
    a, b = adapter.lift_coefficients(batch)
    polynomial = PolyC(adapter.polynomial_coefficients(batch)[0]) if adapter.is_polynomial else None
    lift = HomPair(a[0], b[0])
    _check_nondegenerate(lift)
    logger.debug(f"Instantiated {adapter.spec} at {point}")
    return RationalMapInstance(
        lift=lift,
        critical_lifts=critical_factorization(lift),
        spec=adapter.spec,
        params=point,
        polynomial=polynomial,
    )


def from_lift(lift: HomPair) -> RationalMapInstance:
    """Wrap a bare lift, e.g. a random HomPair, as a map instance."""
    _check_nondegenerate(lift)
    polynomial = None
    if np.all(lift.b[1:] == 0) and lift.b[0] != 0:
        polynomial = PolyC(lift.a / lift.b[0])
    return RationalMapInstance(lift=lift, critical_lifts=critical_factorization(lift), polynomial=polynomial)


def _check_nondegenerate(lift: HomPair) -> None:
    scale = max(np.max(np.abs(lift.a)), np.max(np.abs(lift.b)))
    res = abs(resultant(lift))
    if not np.isfinite(res) or res <= 1e-14 * scale ** (2 * lift.degree):
        raise DegenerateMapError(f"Lift has vanishing resultant ({res:.3e})")


def critical_lifts_batch(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Lifted critical points for a batch of lifts, shape (..., 2d-2, 2).

    The zeros of det F' are found as unit lifts v_j and det F' = K prod_j
    (v_j ^ z). Only |K| is spread over the factors, so every lift is
    |K|^(1/(2d-2)) v_j and the product matches det F' up to the phase of K.
    """
    e = jacobian_form(a, b)
    if np.any(np.all(e == 0, axis=-1)):
        raise DegenerateMapError("det F' vanishes identically")
    directions = binary_form_roots(e)
    product = form_from_lifts(directions)
    pivot = np.argmax(np.abs(product), axis=-1)[..., None]
    K = np.take_along_axis(e, pivot, axis=-1)[..., 0] / np.take_along_axis(product, pivot, axis=-1)[..., 0]
    count = e.shape[-1] - 1
    return directions * (np.abs(K) ** (1.0 / count))[..., None, None]


def critical_factorization(m: Union[RationalMapInstance, HomPair]) -> np.ndarray:
    """Lifted critical points c_j with det F'(z) = u prod_j (c_j ^ z), |u| = 1.

    Returns:
        np.ndarray: Shape (2d-2, 2).
    """
    lift = m.lift if isinstance(m, RationalMapInstance) else m
    return critical_lifts_batch(lift.a[None, :], lift.b[None, :])[0]


def factorization_residual(lift: HomPair, lifts: np.ndarray) -> float:
    """Relative coefficient error of u prod_j (c_j ^ z) against det F', for the best unimodular u."""
    e = jacobian_form(lift.a, lift.b)
    product = form_from_lifts(lifts)
    overlap = np.vdot(product, e)
    phase = overlap / abs(overlap) if overlap != 0 else 1.0
    return float(np.linalg.norm(phase * product - e) / np.linalg.norm(e))


def spherical_derivative(m: Union[RationalMapInstance, HomPair], z: np.ndarray) -> np.ndarray:
    """|f'|_s = (1/d) ||z||^2 / ||F(z)||^2 |det F'(z)| (batched over z)."""
    lift = m.lift if isinstance(m, RationalMapInstance) else m
    return spherical_derivative_batch(lift.a, lift.b, z)


def spherical_derivative_batch(a: np.ndarray, b: np.ndarray, z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    d = np.asarray(a).shape[-1] - 1
    image = lift_apply(a, b, z)
    norm_z = np.sum(np.abs(z) ** 2, axis=-1)
    norm_image = np.sum(np.abs(image) ** 2, axis=-1)
    if np.any(norm_image == 0):
        raise DegenerateMapError("Lift vanishes at a nonzero point")
    return norm_z / norm_image * np.abs(lift_jacobian_det(a, b, z)) / d


def lift_multiplier_factor(a: np.ndarray, b: np.ndarray, p: np.ndarray, p_next: np.ndarray) -> np.ndarray:
    """det F'(p) / (d lambda^2) where F(p) = lambda p_next, for unit lifts."""
    d = np.asarray(a).shape[-1] - 1
    lam = np.sum(np.conj(p_next) * lift_apply(a, b, p), axis=-1)
    return lift_jacobian_det(a, b, p) / (d * lam ** 2)


def fixed_point_multipliers(m: RationalMapInstance) -> FixedPointSpectrum:
    """Multipliers of the d+1 fixed points, sorted by (real, imaginary).

    Fixed points are the zeros of the binary form F1 z2 - F2 z1; at a fixed
    point p with F(p) = lambda p the multiplier is det F'(p) / (d lambda^2).
    Fixed points closer than 1e-6 on the sphere set the multiple flag.
    """
    lift = m.lift
    d = lift.degree
    form = np.zeros(d + 2, dtype=complex)
    form[: d + 1] += lift.a
    form[1:] -= lift.b
    points = binary_form_roots(form)
    multipliers = lift_multiplier_factor(lift.a, lift.b, points, points)

    order = np.lexsort((multipliers.imag, multipliers.real))
    multipliers = multipliers[order]
    points = points[order]

    gaps = chordal_distance(points[:, None, :], points[None, :, :])
    np.fill_diagonal(gaps, np.inf)
    multiple = bool(np.min(gaps) < _MULTIPLE_FIXED_POINT)
    if multiple:
        logger.warning(f"Multiple fixed point detected (gap {np.min(gaps):.2e}); multipliers near 1 are unreliable")
    return FixedPointSpectrum(multipliers=multipliers, fixed_points=points, multiple=multiple)


def per1_line_mod2(w: complex) -> Tuple[complex, complex, complex]:
    """Coefficients (A, B, C) of the line A s1 + B s2 + C = 0 of maps with a fixed point of multiplier w."""
    w = complex(w)
    return w * w + 1.0, -w, -(w ** 3 + 2.0)
