"""Lyapunov Exponent Module.

This module provides three independent estimators of the Lyapunov exponent
L(f) = integral of ln|f'| against the Green measure:

- formula: sum of Green values at the critical points (DeMarco), or for
  polynomials ln d plus the escape rates of the critical points (Przytycki);
- cycles: averages of ln|(f^n)'| over the repelling points of Fix(f^n);
- birkhoff: Monte-Carlo integration over a backward-iteration sample.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from core.cycles import ACCEPT_STEP, NEUTRAL_BAND, fixed_points_of_iterate
from core.exceptions import ConfigurationError, NumericError, RootFindingError
from core.family import FamilySpec
from core.green import SampleCloud, green_lift_batch, green_poly_batch, sample_green_measure
from core.maps import RationalMapInstance, chordal_distance, instantiate, normalize, spherical_derivative
from core.metrics import summarize
from core.polyalg import resultant, roots

logger = logging.getLogger(__name__)

CYCLES_TOLERANCE = 0.05
CRITICAL_EXCLUSION = 1e-12
MIN_BIRKHOFF_SAMPLES = 100


class LyapMethod(Enum):
    FORMULA = "formula"
    CYCLES = "cycles"
    BIRKHOFF = "birkhoff"

    @classmethod
    def parse(cls, text: str) -> List["LyapMethod"]:
        """Methods named by a CLI value (a method name or "all")."""
        text = text.strip().lower()
        if text == "all":
            return list(cls)
        try:
            return [cls(text)]
        except ValueError:
            raise ConfigurationError(f"Unknown method {text!r}; expected formula, cycles, birkhoff or all")


@dataclass(frozen=True)
class LyapEstimate:
    """A Lyapunov exponent in nats with its error measure.

    error is a bound for the formula, twice the standard error for
    birkhoff and the last increment for cycles.
    """
    value: float
    method: LyapMethod
    error: float
    flagged: bool = False
    diagnostics: Dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class Agreement:
    first: LyapMethod
    second: LyapMethod
    difference: float
    tolerance: float

    @property
    def ok(self) -> bool:
        return self.difference <= self.tolerance


def lower_bound(m: RationalMapInstance) -> float:
    """ln d for polynomials, (1/2) ln d for every rational map."""
    d = m.degree
    return math.log(d) if m.is_polynomial else 0.5 * math.log(d)


# ---------------------------------------------------------------------------
# Formula
# ---------------------------------------------------------------------------

def finite_critical_points(m: RationalMapInstance) -> np.ndarray:
    """Finite critical points of a polynomial map, with multiplicity."""
    if m.spec is not None:
        return m.marked_critical_points()
    return roots(m.polynomial.derivative())


def lyap_przytycki_map(m: RationalMapInstance, tol: float = 1e-10, max_iter: int = 4096) -> LyapEstimate:
    """L = ln d + sum of g over the finite critical points."""
    if not m.is_polynomial:
        raise ConfigurationError("The escape-rate formula applies to polynomial maps only")
    critical = finite_critical_points(m)
    batch = green_poly_batch(m.polynomial.coeffs, critical, tol, max_iter)
    undecided = int(np.sum(batch.undecided))
    if undecided:
        logger.warning(f"{undecided} critical orbit(s) undecided at {m.params}")
    return LyapEstimate(
        value=math.log(m.degree) + float(np.sum(batch.values)),
        method=LyapMethod.FORMULA,
        error=float(np.sum(batch.error_bounds)),
        flagged=undecided > 0,
        diagnostics={"undecided": float(undecided)},
    )


def lyap_przytycki(family: Union[FamilySpec, str], params, tol: float = 1e-10,
                   max_iter: int = 4096) -> LyapEstimate:
    return lyap_przytycki_map(instantiate(family, params), tol, max_iter)


def lyap_demarco(m: RationalMapInstance, tol: float = 1e-10) -> LyapEstimate:
    """L = sum_j G_F(c_j) - (2/d) ln|Res F| - ln d over the lifted critical points."""
    d = m.degree
    batch = green_lift_batch(m.lift.a, m.lift.b, m.critical_lifts, tol)
    value = float(np.sum(batch.values)) - 2.0 / d * math.log(abs(resultant(m.lift))) - math.log(d)
    return LyapEstimate(value=value, method=LyapMethod.FORMULA, error=float(np.sum(batch.error_bounds)))


def lyap_formula(m: RationalMapInstance, tol: float = 1e-10, max_iter: int = 4096) -> LyapEstimate:
    """Closed-form Lyapunov exponent: escape rates for polynomials, lifts otherwise."""
    if m.is_polynomial:
        return lyap_przytycki_map(m, tol, max_iter)
    return lyap_demarco(m, tol)


# ---------------------------------------------------------------------------
# Cycles
# ---------------------------------------------------------------------------

def cycle_average(m: RationalMapInstance, n: int, root_tol: float = ACCEPT_STEP) -> float:
    """d^-n sum over repelling p in Fix(f^n) of (1/n) ln|(f^n)'(p)|."""
    moduli = np.abs(fixed_points_of_iterate(m, n, root_tol).multipliers)
    repelling = moduli > 1.0 + NEUTRAL_BAND
    return float(np.sum(np.log(moduli[repelling])) / n / m.degree ** n)


def lyap_cycles(m: RationalMapInstance, n_max: int = 10, root_tol: float = ACCEPT_STEP) -> LyapEstimate:
    """Cycle average at the largest period that solves, error from the previous period.

    Raises:
        RootFindingError: If no period up to n_max can be solved.
    """
    if n_max < 1:
        raise ConfigurationError(f"n_max must be positive, got {n_max}")
    best: Optional[int] = None
    value = 0.0
    for n in range(n_max, 0, -1):
        try:
            value = cycle_average(m, n, root_tol)
        except NumericError as e:
            logger.warning(f"Cycle average failed at period {n}: {e}")
            continue
        best = n
        break
    if best is None:
        raise RootFindingError(f"Cycle solver failed for every period up to {n_max}", float("inf"))

    error = value
    if best > 1:
        try:
            error = abs(value - cycle_average(m, best - 1, root_tol))
        except NumericError as e:
            logger.warning(f"Cycle average failed at period {best - 1}: {e}")
            error = float("inf")
    if best < n_max:
        logger.warning(f"Cycle estimate falls back to period {best} of {n_max}")
    return LyapEstimate(value=value, method=LyapMethod.CYCLES, error=error, flagged=best < n_max,
                        diagnostics={"n": float(best)})


# ---------------------------------------------------------------------------
# Birkhoff
# ---------------------------------------------------------------------------

def _replace_near_critical(values: np.ndarray, bad: np.ndarray,
                           chain_ids: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Swap every bad sample for the next good sample of its chain; drop it if none follows."""
    keep = np.ones(values.size, dtype=bool)
    values = values.copy()
    for i in np.flatnonzero(bad):
        j = i + 1
        while j < values.size and chain_ids[j] == chain_ids[i] and bad[j]:
            j += 1
        if j < values.size and chain_ids[j] == chain_ids[i]:
            values[i] = values[j]
        else:
            keep[i] = False
    return values[keep], chain_ids[keep]


def lyap_birkhoff(m: RationalMapInstance, n_samples: int = 100000, seed: int = 0, burn_in: int = 64,
                  n_chains: Optional[int] = None, workers: int = 1,
                  cloud: Optional[SampleCloud] = None) -> LyapEstimate:
    """Monte-Carlo mean of ln|f'|_s over a Green-measure sample.

    A precomputed cloud is used as given; otherwise n_samples points are
    drawn with the remaining arguments.

    Raises:
        ConfigurationError: If n_samples < 100.
    """
    size = n_samples if cloud is None else len(cloud)
    if size < MIN_BIRKHOFF_SAMPLES:
        raise ConfigurationError(f"Birkhoff estimate needs at least {MIN_BIRKHOFF_SAMPLES} samples, got {size}")
    if cloud is None:
        cloud = sample_green_measure(m, n_samples, burn_in=burn_in, seed=seed, n_chains=n_chains, workers=workers)

    critical = normalize(m.critical_lifts)
    distance = chordal_distance(cloud.points[:, None, :], critical[None, :, :]).min(axis=1)
    bad = distance < CRITICAL_EXCLUSION
    with np.errstate(divide="ignore"):
        values = np.log(spherical_derivative(m, cloud.points))
    bad |= ~np.isfinite(values)
    replaced = int(np.sum(bad))
    values, chain_ids = _replace_near_critical(values, bad, cloud.chain_ids)
    if replaced:
        logger.warning(f"Replaced {replaced} sample(s) near critical points")

    stats = summarize(values, chain_ids)
    return LyapEstimate(
        value=stats["mean"],
        method=LyapMethod.BIRKHOFF,
        error=2.0 * stats["stderr"],
        diagnostics={"stderr": stats["stderr"], "replaced": float(replaced), "samples": float(values.size)},
    )


# ---------------------------------------------------------------------------
# Cross-validation
# ---------------------------------------------------------------------------

def _tolerance(first: LyapEstimate, second: LyapEstimate) -> float:
    tolerance = 1e-12
    for estimate in (first, second):
        if estimate.method is LyapMethod.CYCLES:
            tolerance += CYCLES_TOLERANCE
        elif estimate.method is LyapMethod.BIRKHOFF:
            tolerance += 1.5 * estimate.error
        else:
            tolerance += estimate.error
    return tolerance


def cross_validate(estimates: Sequence[LyapEstimate]) -> List[Agreement]:
    """Pairwise agreement of estimates from different methods.

    Cycle estimates are allowed 0.05, Birkhoff estimates three standard
    errors, formula estimates their error bound.
    """
    table = []
    for i, first in enumerate(estimates):
        for second in estimates[i + 1:]:
            table.append(Agreement(first.method, second.method, abs(first.value - second.value),
                                   _tolerance(first, second)))
    return table


def estimate(m: RationalMapInstance, method: LyapMethod, *, tol: float = 1e-10, max_iter: int = 4096,
             n_max: int = 10, n_samples: int = 100000, seed: int = 0, burn_in: int = 64,
             n_chains: Optional[int] = None, workers: int = 1, root_tol: float = ACCEPT_STEP) -> LyapEstimate:
    """Run one estimator by method.

    tol is the Green-function tolerance; root_tol bounds the cycle solver's
    acceptance step.
    """
    if method is LyapMethod.FORMULA:
        return lyap_formula(m, tol, max_iter)
    if method is LyapMethod.CYCLES:
        return lyap_cycles(m, n_max, root_tol)
    return lyap_birkhoff(m, n_samples, seed=seed, burn_in=burn_in, n_chains=n_chains, workers=workers)
