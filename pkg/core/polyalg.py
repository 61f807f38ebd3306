"""Polynomial Algebra Module.

This module provides the algebraic substrate of the toolkit: dense complex
polynomials, homogeneous lifts of rational maps, Aberth-Ehrlich simultaneous
root finding, exact division, Moebius/divisor utilities and resultants of
binary forms.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import polynomial as npoly
from sympy import divisors as _sympy_divisors
from sympy import factorint

from core.exceptions import ConfigurationError, DegenerateMapError, NotDivisibleError, RootFindingError

logger = logging.getLogger(__name__)

_EPS = np.finfo(float).eps


def _frozen(values) -> np.ndarray:
    array = np.array(values, dtype=complex)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class PolyC:
    """Dense complex polynomial with ascending coefficients.

    Trailing zero coefficients are trimmed on construction, so the zero
    polynomial is the empty coefficient vector and has degree -1.
    """
    coeffs: np.ndarray

    def __post_init__(self):
        array = np.atleast_1d(np.asarray(self.coeffs, dtype=complex))
        if array.ndim != 1:
            raise ConfigurationError("PolyC coefficients must be one-dimensional")
        nonzero = np.flatnonzero(array)
        array = array[: nonzero[-1] + 1] if nonzero.size else array[:0]
        object.__setattr__(self, "coeffs", _frozen(array))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return len(self.coeffs) == 0

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def __call__(self, z):
        if self.is_zero():
            return np.zeros_like(np.asarray(z, dtype=complex))
        return npoly.polyval(z, self.coeffs)

    def derivative(self) -> "PolyC":
        if self.degree < 1:
            return PolyC([])
        return PolyC(npoly.polyder(self.coeffs))

    def __add__(self, other: "PolyC") -> "PolyC":
        total = np.zeros(max(len(self.coeffs), len(other.coeffs)), dtype=complex)
        total[: len(self.coeffs)] += self.coeffs
        total[: len(other.coeffs)] += other.coeffs
        return PolyC(total)

    def __neg__(self) -> "PolyC":
        return PolyC(-self.coeffs)

    def __sub__(self, other: "PolyC") -> "PolyC":
        return self + (-other)

    def __mul__(self, other: "PolyC") -> "PolyC":
        if self.is_zero() or other.is_zero():
            return PolyC([])
        return PolyC(np.convolve(self.coeffs, other.coeffs))

    def compose(self, inner: "PolyC") -> "PolyC":
        """Return self(inner(z)) by Horner's scheme on polynomials."""
        result = PolyC([])
        for coefficient in self.coeffs[::-1]:
            result = result * inner + PolyC([coefficient])
        return result

    @classmethod
    def from_roots(cls, roots: Sequence[complex]) -> "PolyC":
        return cls(npoly.polyfromroots(np.asarray(roots, dtype=complex)))

    @classmethod
    def monomial(cls, degree: int, coefficient: complex = 1.0) -> "PolyC":
        coeffs = np.zeros(degree + 1, dtype=complex)
        coeffs[degree] = coefficient
        return cls(coeffs)


@dataclass(frozen=True)
class HomPair:
    """Pair of degree-d binary forms, the lift F of a rational map.

    F1 = sum a_i z1^i z2^(d-i) and F2 = sum b_i z1^i z2^(d-i).
    """
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=complex)
        b = np.asarray(self.b, dtype=complex)
        if a.ndim != 1 or a.shape != b.shape:
            raise ConfigurationError("HomPair needs two coefficient vectors of equal length d+1")
        if a.size < 3:
            raise ConfigurationError(f"HomPair degree must be at least 2, got {a.size - 1}")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ConfigurationError("HomPair coefficients must be finite")
        object.__setattr__(self, "a", _frozen(a))
        object.__setattr__(self, "b", _frozen(b))

    @property
    def degree(self) -> int:
        return len(self.a) - 1

    def scaled(self, s: complex) -> "HomPair":
        return HomPair(self.a * s, self.b * s)

    def __call__(self, z: np.ndarray) -> np.ndarray:
        return lift_apply(self.a, self.b, z)

    def jacobian_det(self, z: np.ndarray) -> np.ndarray:
        return lift_jacobian_det(self.a, self.b, z)


def _monomials(z: np.ndarray, degree: int) -> np.ndarray:
    """z1^i z2^(degree-i) for i = 0..degree, stacked on a trailing axis."""
    powers = np.arange(degree + 1)
    z1 = z[..., 0, None]
    z2 = z[..., 1, None]
    return np.power(z1, powers) * np.power(z2, degree - powers)


def lift_apply(a: np.ndarray, b: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Evaluate a lift (batched).

    Args:
        a: Coefficients of F1, shape (..., d+1).
        b: Coefficients of F2, shape (..., d+1).
        z: Points of C^2, shape (..., 2).

    Returns:
        np.ndarray: F(z) with shape (..., 2).
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    mono = _monomials(np.asarray(z, dtype=complex), a.shape[-1] - 1)
    return np.stack([np.sum(a * mono, axis=-1), np.sum(b * mono, axis=-1)], axis=-1)


def _partials(c: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Coefficients of d/dz1 and d/dz2 of a binary form, as degree d-1 forms."""
    d = c.shape[-1] - 1
    k = np.arange(d)
    by_z1 = (k + 1) * c[..., 1:]
    by_z2 = (d - k) * c[..., :-1]
    return by_z1, by_z2


def lift_jacobian(a: np.ndarray, b: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Jacobian matrix DF(z) with shape (..., 2, 2)."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    mono = _monomials(np.asarray(z, dtype=complex), a.shape[-1] - 2)
    a1, a2 = _partials(a)
    b1, b2 = _partials(b)
    row1 = np.stack([np.sum(a1 * mono, -1), np.sum(a2 * mono, -1)], axis=-1)
    row2 = np.stack([np.sum(b1 * mono, -1), np.sum(b2 * mono, -1)], axis=-1)
    return np.stack([row1, row2], axis=-2)


def lift_jacobian_det(a: np.ndarray, b: np.ndarray, z: np.ndarray) -> np.ndarray:
    jac = lift_jacobian(a, b, z)
    return jac[..., 0, 0] * jac[..., 1, 1] - jac[..., 0, 1] * jac[..., 1, 0]


def jacobian_form(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Coefficients of det F' as a binary form of degree 2d-2 (batched)."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    a1, a2 = _partials(a)
    b1, b2 = _partials(b)
    return _convolve_last(a1, b2) - _convolve_last(a2, b1)


def _convolve_last(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    x, y = np.broadcast_arrays(x[..., :, None], y[..., None, :])
    n, m = x.shape[-2], y.shape[-1]
    out = np.zeros(x.shape[:-2] + (n + m - 1,), dtype=complex)
    product = x * y
    for i in range(n):
        out[..., i:i + m] += product[..., i, :]
    return out


def compose_lifts(outer: HomPair, inner: HomPair) -> HomPair:
    """Return the lift of f o g from lifts F of f and G of g."""
    p = PolyC(inner.a)
    q = PolyC(inner.b)
    d_out, d_in = outer.degree, inner.degree
    total = d_out * d_in

    def component(coeffs: np.ndarray) -> np.ndarray:
        acc = np.zeros(total + 1, dtype=complex)
        for k, coefficient in enumerate(coeffs):
            if coefficient == 0:
                continue
            term = _power(p, k) * _power(q, d_out - k)
            acc[: len(term.coeffs)] += coefficient * term.coeffs
        return acc

    return HomPair(component(outer.a), component(outer.b))


def _power(p: PolyC, k: int) -> PolyC:
    result = PolyC([1.0])
    for _ in range(k):
        result = result * p
    return result


# ---------------------------------------------------------------------------
# Simultaneous root finding
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AberthResult:
    """Outcome of an Aberth-Ehrlich run."""
    roots: np.ndarray
    converged: np.ndarray
    iterations: int
    last_step: np.ndarray


def initial_circle(n: int, radius: float) -> np.ndarray:
    """n starting points on a circle, rotated off the real axis by pi/(2n)."""
    k = np.arange(n)
    return radius * np.exp(1j * (2.0 * np.pi * k / n + np.pi / (2.0 * n)))


def fujiwara_bound(p: PolyC) -> float:
    """Fujiwara's upper bound on the moduli of the roots of p."""
    c = p.coeffs
    n = p.degree
    lead = abs(c[-1])
    terms = [abs(c[n - k] / lead) ** (1.0 / k) for k in range(1, n)]
    terms.append(abs(c[0] / (2.0 * lead)) ** (1.0 / n))
    return 2.0 * max(terms) if terms else 1.0


def _repulsion(z: np.ndarray, idx: np.ndarray, block: int = 512) -> np.ndarray:
    """sum_{j != i} 1/(z_i - z_j) for every i in idx."""
    out = np.empty(idx.size, dtype=complex)
    with np.errstate(divide="ignore", invalid="ignore"):
        for start in range(0, idx.size, block):
            rows = idx[start:start + block]
            diff = z[rows, None] - z[None, :]
            diff[np.arange(rows.size), rows] = np.inf
            out[start:start + block] = np.sum(1.0 / diff, axis=1)
    return out


def aberth(log_derivative: Callable[[np.ndarray], np.ndarray],
           initial: np.ndarray,
           step_tol: float = 1e-13,
           max_iter: int = 1000,
           frozen: Optional[Callable[[np.ndarray], np.ndarray]] = None) -> AberthResult:
    """Aberth-Ehrlich simultaneous iteration driven by a log-derivative.

    The polynomial is only seen through p'/p, so callers can evaluate it by
    coefficients or along a dynamical recurrence.

    Args:
        log_derivative: Vectorised callable returning p'(z)/p(z).
        initial: Distinct starting points, one per root.
        step_tol: A root freezes once its correction is below step_tol*(1+|z|).
        max_iter: Iteration cap.
        frozen: Optional callable returning a mask of points already at
            rounding-level backward error.

    Returns:
        AberthResult: roots, per-root convergence flags, iteration count.
    """
    z = np.array(initial, dtype=complex)
    active = np.ones(z.size, dtype=bool)
    last_step = np.full(z.size, np.inf)
    iteration = 0
    for iteration in range(1, max_iter + 1):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            ratio = log_derivative(z[idx])
            step = 1.0 / (ratio - _repulsion(z, idx))
        step = np.where(np.isfinite(step), step, 0.0)
        z[idx] -= step
        last_step[idx] = np.abs(step)
        done = np.abs(step) <= step_tol * (1.0 + np.abs(z[idx]))
        if frozen is not None:
            done |= frozen(z[idx])
        active[idx[done]] = False
    converged = ~active
    logger.debug(f"Aberth iteration: {z.size} roots, {iteration} sweeps, {int(active.sum())} unconverged")
    return AberthResult(roots=z, converged=converged, iterations=iteration, last_step=last_step)


def roots(p: PolyC, tol: float = 1e-8, max_iter: int = 1000) -> np.ndarray:
    """Find all roots of p by Aberth-Ehrlich iteration.

    Args:
        p: Polynomial of degree at least 1.
        tol: Acceptance threshold on the relative backward error
            |p(r)| / sum |a_k||r|^k.
        max_iter: Iteration cap.

    Returns:
        np.ndarray: degree-many roots, sorted by (real, imaginary) parts.

    Raises:
        ConfigurationError: If p is constant or has non-finite coefficients.
        RootFindingError: If the backward error of some root exceeds tol.
    """
    if p.degree < 1:
        raise ConfigurationError(f"roots() needs a polynomial of degree >= 1, got degree {p.degree}")
    if not np.all(np.isfinite(p.coeffs)):
        raise ConfigurationError("roots() needs finite coefficients")

    zeros_at_origin = int(np.flatnonzero(p.coeffs)[0])
    core = PolyC(p.coeffs[zeros_at_origin:])
    found = [np.zeros(zeros_at_origin, dtype=complex)]

    if core.degree >= 1:
        coeffs = core.coeffs / core.coeffs[-1]
        deriv = npoly.polyder(coeffs)
        moduli = np.abs(coeffs)

        def log_derivative(z):
            return npoly.polyval(z, deriv) / npoly.polyval(z, coeffs)

        def backward_error(z):
            return np.abs(npoly.polyval(z, coeffs)) / npoly.polyval(np.abs(z), moduli)

        def at_rounding_level(z):
            return backward_error(z) <= 8.0 * _EPS

        start = initial_circle(core.degree, fujiwara_bound(core))
        result = aberth(log_derivative, start, step_tol=4.0 * _EPS, max_iter=max_iter,
                        frozen=at_rounding_level)
        residual = float(np.max(backward_error(result.roots)))
        if not np.isfinite(residual) or residual > tol:
            logger.error(f"Root finding failed for degree {core.degree}: residual {residual:.3e}")
            raise RootFindingError(f"Aberth iteration did not converge for degree {core.degree}", residual)
        found.append(result.roots)

    all_roots = np.concatenate(found)
    return sort_complex(all_roots)


def sort_complex(values: np.ndarray) -> np.ndarray:
    """Sort complex numbers lexicographically by (real, imaginary)."""
    values = np.asarray(values, dtype=complex)
    order = np.lexsort((values.imag, values.real))
    return values[order]


# ---------------------------------------------------------------------------
# Division, Moebius, divisors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DivisionResult:
    """Quotient of an exact division with the discarded remainder norm."""
    quotient: PolyC
    remainder_norm: float


def divide_exact(num: PolyC, den: PolyC, tol: float = 1e-9) -> DivisionResult:
    """Divide num by den, requiring a negligible remainder.

    Raises:
        ConfigurationError: If den is the zero polynomial.
        NotDivisibleError: If the remainder norm exceeds tol * ||num||.
    """
    if den.is_zero():
        raise ConfigurationError("Division by the zero polynomial")
    if num.is_zero():
        return DivisionResult(PolyC([]), 0.0)
    quotient, remainder = npoly.polydiv(num.coeffs, den.coeffs)
    remainder_norm = float(np.linalg.norm(remainder))
    if remainder_norm > tol * num.norm():
        raise NotDivisibleError(f"Degree {num.degree} polynomial is not divisible by degree {den.degree} divisor",
                                remainder_norm)
    return DivisionResult(PolyC(quotient), remainder_norm)


def _check_positive(n) -> int:
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
        raise ConfigurationError(f"Expected a positive integer, got {n!r}")
    return int(n)


def mobius(n: int) -> int:
    """Classical Moebius function."""
    n = _check_positive(n)
    exponents = factorint(n).values()
    if any(e > 1 for e in exponents):
        return 0
    return -1 if len(exponents) % 2 else 1


def divisors(n: int) -> List[int]:
    """Positive divisors of n in increasing order."""
    return [int(k) for k in _sympy_divisors(_check_positive(n))]


# ---------------------------------------------------------------------------
# Resultants
# ---------------------------------------------------------------------------

def sylvester_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Sylvester matrix of two degree-d forms from descending coefficient rows (batched).

    Rows 0..d-1 hold shifted copies of (a_d, ..., a_0), rows d..2d-1 those of
    (b_d, ..., b_0).
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    d = a.shape[-1] - 1
    batch = np.broadcast_shapes(a.shape[:-1], b.shape[:-1])
    matrix = np.zeros(batch + (2 * d, 2 * d), dtype=complex)
    a_desc = np.broadcast_to(a[..., ::-1], batch + (d + 1,))
    b_desc = np.broadcast_to(b[..., ::-1], batch + (d + 1,))
    for row in range(d):
        matrix[..., row, row:row + d + 1] = a_desc
        matrix[..., d + row, row:row + d + 1] = b_desc
    return matrix


@lru_cache(maxsize=None)
def _anchor_sign(d: int) -> float:
    """Sign making Res(z1^d, z2^d) = 1 under the Sylvester row convention."""
    a = np.zeros(d + 1)
    b = np.zeros(d + 1)
    a[d] = 1.0
    b[0] = 1.0
    return float(np.sign(np.linalg.det(sylvester_matrix(a, b)).real))


def resultant(F) -> complex:
    """Resultant of a lift, normalised so that Res(z1^d, z2^d) = 1.

    Accepts a HomPair or a tuple of batched coefficient arrays (a, b) with
    shape (..., d+1); the batched form returns an array.
    """
    if isinstance(F, HomPair):
        a, b = F.a, F.b
    else:
        a, b = (np.asarray(x, dtype=complex) for x in F)
    d = a.shape[-1] - 1
    value = _anchor_sign(d) * np.linalg.det(sylvester_matrix(a, b))
    return complex(value) if np.ndim(value) == 0 else value


# ---------------------------------------------------------------------------
# Zeros of binary forms
# ---------------------------------------------------------------------------

def _unit_lifts(t: np.ndarray) -> np.ndarray:
    lifts = np.stack([t, np.ones_like(t)], axis=-1)
    return lifts / np.linalg.norm(lifts, axis=-1, keepdims=True)


def companion_roots(coeffs: np.ndarray) -> np.ndarray:
    """Roots of polynomials with nonzero leading coefficient (batched, ascending)."""
    n = coeffs.shape[-1] - 1
    monic = coeffs[..., :-1] / coeffs[..., -1:]
    companion = np.zeros(coeffs.shape[:-1] + (n, n), dtype=complex)
    if n > 1:
        companion[..., np.arange(1, n), np.arange(n - 1)] = 1.0
    companion[..., :, -1] = -monic
    try:
        values = np.linalg.eigvals(companion)
    except np.linalg.LinAlgError as e:
        raise RootFindingError(f"Companion eigenvalue solve failed: {e}", float("inf"))
    order = np.lexsort((values.imag, values.real), axis=-1)
    return np.take_along_axis(values, order, axis=-1)


def binary_form_roots(coeffs: np.ndarray) -> np.ndarray:
    """Zeros of binary forms as unit-norm lifts (batched).

    Exact trailing zeros of the coefficient vector give zeros at [0:1],
    exact leading zeros give zeros at [1:0]; the remaining factor is solved
    in the chart z1/z2. Within one form the order is: [0:1] zeros, finite
    zeros sorted by (real, imaginary), [1:0] zeros.

    Args:
        coeffs: Shape (..., D+1), coefficient k belonging to z1^k z2^(D-k).

    Returns:
        np.ndarray: Shape (..., D, 2).

    Raises:
        DegenerateMapError: If some form vanishes identically.
    """
    coeffs = np.asarray(coeffs, dtype=complex)
    batch = coeffs.shape[:-1]
    D = coeffs.shape[-1] - 1
    flat = coeffs.reshape(-1, D + 1)
    nonzero = flat != 0
    if not np.all(nonzero.any(axis=1)):
        raise DegenerateMapError("Binary form vanishes identically")
    bottom = np.argmax(nonzero, axis=1)
    top = np.argmax(nonzero[:, ::-1], axis=1)

    out = np.empty((flat.shape[0], D, 2), dtype=complex)
    patterns = np.stack([bottom, top], axis=1)
    for m_bot, m_top in np.unique(patterns, axis=0):
        rows = np.flatnonzero((bottom == m_bot) & (top == m_top))
        middle = flat[rows, m_bot:D + 1 - m_top]
        out[rows, :m_bot] = (0.0, 1.0)
        if middle.shape[1] > 1:
            out[rows, m_bot:D - m_top] = _unit_lifts(companion_roots(middle))
        if m_top:
            out[rows, D - m_top:] = (1.0, 0.0)
    return out.reshape(batch + (D, 2))


def form_from_lifts(lifts: np.ndarray) -> np.ndarray:
    """Coefficients of prod_j (v_j ^ z) where v ^ z = v1 z2 - v2 z1."""
    coeffs = np.ones(lifts.shape[:-2] + (1,), dtype=complex)
    for j in range(lifts.shape[-2]):
        factor = np.stack([lifts[..., j, 0], -lifts[..., j, 1]], axis=-1)
        coeffs = _convolve_last(coeffs, factor)
    return coeffs
