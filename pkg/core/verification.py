"""Verification Suite Module.

This module runs the invariant checks behind `main.py verify`. The quick
suite finishes in seconds to minutes and covers the algebraic anchors,
counting laws, Green laws, Lyapunov anchors, the dd^c calibration and the
undecided-cell policy. The full suite adds the desk-scale experiments on
bifurcation currents and measures.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from core.bifurcation import (
    DensityField, GridAxis, ParamGrid, ScalarField, boundary_distance, ddc_density, empirical_vs_density,
    mass_outside, quadratic_window, scan_activity, scan_L, wedge_density,
)
from core.cycles import ACCEPT_STEP, dynatomic, multiplier_spectrum, nu, per_n_centers, per_n_w
from core.exceptions import DynamicsException
from core.family import create_family
from core.green import green_lift_batch
from core.lyapunov import lyap_birkhoff, lyap_cycles, lyap_demarco, lyap_formula, lyap_przytycki_map
from core.maps import fixed_point_multipliers, from_lift, instantiate
from core.polyalg import HomPair, lift_apply, resultant
from utils.parallel import stream

logger = logging.getLogger(__name__)

LN2 = math.log(2.0)
DYNATOMIC_DEGREES = (2, 2, 6, 12, 30, 54)
CENTER_COUNTS = (1, 1, 3, 6, 15, 27)
UNDECIDED_LIMIT = 0.01
HYPERBOLIC_QUADRATIC = (0.0, -1.0, -0.1226 + 0.7449j, -1.7549, 1.0)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    flagged: int = 0


@dataclass(frozen=True)
class SuiteSettings:
    """Sizes of one suite; the full suite runs the acceptance sizes."""
    random_maps: int
    green_points: int
    cycle_period: int
    birkhoff_samples: int
    calibration_resolution: int
    scan_resolution: int
    mod2_maps: int
    mod2_period: int

    @classmethod
    def named(cls, suite: str) -> "SuiteSettings":
        if suite == "full":
            return cls(50, 20, 10, 100000, 512, 512, 100, 8)
        return cls(10, 20, 8, 20000, 128, 64, 25, 6)


def _random_lift(rng: np.random.Generator, d: int) -> HomPair:
    a = rng.standard_normal(d + 1) + 1j * rng.standard_normal(d + 1)
    b = rng.standard_normal(d + 1) + 1j * rng.standard_normal(d + 1)
    return HomPair(a, b)


class VerificationSuite:
    """Runs the invariant checks and collects one CheckResult per check.

    A check that raises a DynamicsException fails with the exception text as
    detail; the suite itself never raises for a single check.
    """

    def __init__(self, suite: str = "quick", seed: int = 0, workers: int = 1, tol: float = 1e-10,
                 max_iter: int = 4096, wedge_resolution: int = 32, root_tol: float = ACCEPT_STEP,
                 division_tol: float = 1e-9):
        self.logger = logging.getLogger(__name__)
        self.suite = suite
        self.settings = SuiteSettings.named(suite)
        self.seed = seed
        self.workers = workers
        self.tol = tol
        self.max_iter = max_iter
        self.wedge_resolution = wedge_resolution
        self.root_tol = root_tol
        self.division_tol = division_tol
        self._quadratic: Optional[Tuple[ScalarField, DensityField]] = None

    def checks(self) -> List[Tuple[str, Callable[[], CheckResult]]]:
        quick = [
            ("resultant_anchor", self.check_resultant_anchor),
            ("resultant_homogeneity", self.check_resultant_homogeneity),
            ("counting_laws", self.check_counting_laws),
            ("per_n_w_oracle", self.check_per_n_w_oracle),
            ("green_laws", self.check_green_laws),
            ("lyapunov_anchors", self.check_lyapunov_anchors),
            ("formula_equivalence", self.check_formula_equivalence),
            ("mod2_algebra", self.check_mod2_algebra),
            ("ddc_calibration", self.check_ddc_calibration),
            ("undecided_cells", self.check_undecided_cells),
        ]
        if self.suite != "full":
            return quick
        return quick + [
            ("quadratic_bifurcation_mass", self.check_quadratic_mass),
            ("center_equidistribution", self.check_center_equidistribution),
            ("lnr_convergence", self.check_lnr_convergence),
            ("cubic_self_wedge", self.check_cubic_self_wedge),
            ("cubic_compactness", self.check_cubic_compactness),
        ]

    def run(self) -> List[CheckResult]:
        results = []
        for name, check in self.checks():
            self.logger.info(f"Running check {name}")
            try:
                result = check()
            except DynamicsException as e:
                self.logger.error(f"Check {name} raised {type(e).__name__}: {e}")
                result = CheckResult(name, False, f"{type(e).__name__}: {e}")
            level = logging.INFO if result.passed else logging.WARNING
            self.logger.log(level, f"{name}: {'pass' if result.passed else 'FAIL'} ({result.detail})")
            results.append(result)
        return results

    # -----------------------------------------------------------------------
    # Algebra
    # -----------------------------------------------------------------------

    def check_resultant_anchor(self) -> CheckResult:
        errors = []
        for d in range(2, 6):
            a = np.zeros(d + 1)
            b = np.zeros(d + 1)
            a[d] = 1.0
            b[0] = 1.0
            errors.append(abs(resultant(HomPair(a, b)) - 1.0))
        worst = max(errors)
        return CheckResult("resultant_anchor", worst <= 1e-12, f"max |Res(z1^d, z2^d) - 1| = {worst:.2e}")

    def check_resultant_homogeneity(self) -> CheckResult:
        rng = stream(self.seed, 1)
        worst = 0.0
        for d in range(2, 6):
            for _ in range(self.settings.random_maps):
                lift = _random_lift(rng, d)
                t = complex(rng.uniform(0.5, 2.0), rng.uniform(-1.0, 1.0))
                expected = t ** (2 * d) * resultant(lift)
                worst = max(worst, abs(resultant(lift.scaled(t)) - expected) / abs(expected))
        return CheckResult("resultant_homogeneity", worst <= 1e-8, f"max relative error {worst:.2e}")

    def check_counting_laws(self) -> CheckResult:
        quadratic = instantiate("quadratic", [0.3 + 0.1j])
        degrees = tuple(dynatomic(quadratic, n, tol=self.division_tol).poly.degree for n in range(1, 7))
        counts = tuple(len(per_n_centers(n, self.root_tol)) for n in range(1, 7))
        recursion = tuple(nu(2, n) for n in range(1, 7))
        passed = degrees == DYNATOMIC_DEGREES == recursion and counts == CENTER_COUNTS
        return CheckResult("counting_laws", passed, f"degrees {degrees}, centers {counts}")

    def check_per_n_w_oracle(self) -> CheckResult:
        result = per_n_w(2, 0.0, root_tol=self.root_tol)
        passed = len(result.parameters) == 1 and abs(result.parameters[0] + 1.0) <= 1e-10
        return CheckResult("per_n_w_oracle", passed, f"Per_2(0) = {list(np.round(result.parameters, 12))}")

    def check_mod2_algebra(self) -> CheckResult:
        rng = stream(self.seed, 2)
        index_error = 0.0
        third_error = 0.0
        for _ in range(self.settings.mod2_maps):
            spectrum = fixed_point_multipliers(from_lift(_random_lift(rng, 2)))
            mu = spectrum.multipliers
            s1 = mu.sum()
            s3 = mu.prod()
            index_error = max(index_error, abs(s3 - s1 + 2.0) / (1.0 + abs(s1) + abs(s3)))
            for i, j, k in ((0, 1, 2), (0, 2, 1), (1, 2, 0)):
                denominator = 1.0 - mu[i] * mu[j]
                if abs(denominator) > 1e-3:
                    predicted = (2.0 - mu[i] - mu[j]) / denominator
                    third_error = max(third_error, abs(predicted - mu[k]) / (1.0 + abs(mu[k])))
        estimate = lyap_cycles(instantiate("mod2", [2.0, 0.0]), self.settings.mod2_period, self.root_tol)
        gap = abs(estimate.value - LN2)
        passed = index_error <= 1e-9 and third_error <= 1e-9 and gap <= 0.02
        return CheckResult("mod2_algebra", passed,
                           f"index {index_error:.2e}, third multiplier {third_error:.2e}, |L(2,0) - ln 2| = {gap:.4f}")

    # -----------------------------------------------------------------------
    # Green functions and Lyapunov exponents
    # -----------------------------------------------------------------------

    def check_green_laws(self) -> CheckResult:
        rng = stream(self.seed, 3)
        worst_invariance = 0.0
        worst_scaling = 0.0
        for k in range(self.settings.random_maps):
            d = 2 + k % 3
            lift = _random_lift(rng, d)
            z = rng.standard_normal((self.settings.green_points, 2)) + 1j * rng.standard_normal(
                (self.settings.green_points, 2))
            base = green_lift_batch(lift.a, lift.b, z, self.tol).values
            image = green_lift_batch(lift.a, lift.b, lift_apply(lift.a, lift.b, z), self.tol).values
            scaled = green_lift_batch(lift.a, lift.b, 3.0 * z, self.tol).values
            worst_invariance = max(worst_invariance, float(np.max(np.abs(image - d * base))))
            worst_scaling = max(worst_scaling, float(np.max(np.abs(scaled - base - math.log(3.0)))))
        passed = worst_invariance <= 1e-7 and worst_scaling <= 1e-7
        return CheckResult("green_laws", passed,
                           f"max |G(F z) - d G(z)| = {worst_invariance:.2e}, "
                           f"max |G(3z) - G(z) - ln 3| = {worst_scaling:.2e}")

    def check_lyapunov_anchors(self) -> CheckResult:
        square = instantiate("quadratic", [0.0])
        chebyshev = instantiate("quadratic", [-2.0])
        formula = abs(lyap_formula(square, self.tol, self.max_iter).value - LN2)
        formula_chebyshev = abs(lyap_formula(chebyshev, self.tol, self.max_iter).value - LN2)
        cycles = abs(lyap_cycles(square, self.settings.cycle_period, self.root_tol).value - LN2)
        birkhoff = lyap_birkhoff(square, self.settings.birkhoff_samples, seed=self.seed, workers=self.workers)
        birkhoff_gap = abs(birkhoff.value - LN2)
        stderr = birkhoff.diagnostics["stderr"]
        passed = (formula <= 1e-6 and formula_chebyshev <= 1e-6 and cycles <= 0.01
                  and birkhoff_gap <= 3.0 * stderr + 1e-12)
        return CheckResult("lyapunov_anchors", passed,
                           f"formula {formula:.2e}, chebyshev {formula_chebyshev:.2e}, cycles {cycles:.2e}, "
                           f"birkhoff {birkhoff_gap:.2e} (stderr {stderr:.2e})")

    def check_formula_equivalence(self) -> CheckResult:
        rng = stream(self.seed, 4)
        params = rng.uniform(-2.0, 2.0, 25) + 1j * rng.uniform(-2.0, 2.0, 25)
        worst = 0.0
        undecided = 0
        for c in params:
            m = instantiate("quadratic", [c])
            escape = lyap_przytycki_map(m, self.tol, self.max_iter)
            undecided += escape.flagged
            worst = max(worst, abs(lyap_demarco(m, self.tol).value - escape.value))
        return CheckResult("formula_equivalence", worst <= 1e-6,
                           f"max |DeMarco - Przytycki| = {worst:.2e} on {len(params)} parameters",
                           flagged=int(undecided))

    # -----------------------------------------------------------------------
    # Scans and densities
    # -----------------------------------------------------------------------

    def check_ddc_calibration(self) -> CheckResult:
        resolution = self.settings.calibration_resolution
        anchor_grid = ParamGrid((GridAxis(0j, 1.0, resolution),))
        lam = anchor_grid.axes[0].values()
        anchor = ddc_density(ScalarField(anchor_grid, np.log(np.abs(lam)), "ln|lambda|"))
        window = quadratic_window(resolution)
        c = window.axes[0].values()
        pluriharmonic = max(
            abs(ddc_density(ScalarField(window, np.real(c * c), "Re lambda^2")).total_mass),
            abs(ddc_density(ScalarField(window, np.log(np.abs(c - 5.0)), "ln|lambda - 5|")).total_mass),
        )
        anchor_error = abs(anchor.total_mass - 1.0)
        passed = anchor_error <= 0.005 and pluriharmonic <= 1e-3
        return CheckResult("ddc_calibration", passed,
                           f"anchor mass {anchor.total_mass:.6f}, pluriharmonic mass {pluriharmonic:.2e}")

    def _quadratic_scan(self) -> Tuple[ScalarField, DensityField]:
        if self._quadratic is None:
            field = scan_L("quadratic", quadratic_window(self.settings.scan_resolution), tol=self.tol,
                           max_iter=self.max_iter, workers=self.workers)
            self._quadratic = (field, ddc_density(field))
        return self._quadratic

    def check_undecided_cells(self) -> CheckResult:
        field, _ = self._quadratic_scan()
        fraction = field.flagged_count / field.values.size
        return CheckResult("undecided_cells", fraction <= UNDECIDED_LIMIT,
                           f"{field.flagged_count} of {field.values.size} cells undecided ({fraction:.2%}) "
                           f"at max_iter={self.max_iter}",
                           flagged=field.flagged_count)

    def check_quadratic_mass(self) -> CheckResult:
        field, density = self._quadratic_scan()
        near = boundary_distance(field.grid) <= 0.2
        outside = mass_outside(density, near)
        current_mass = 2.0 * density.total_mass
        passed = abs(current_mass - 1.0) <= 0.05 and outside <= 0.02
        return CheckResult("quadratic_bifurcation_mass", passed,
                           f"2 x mass {current_mass:.4f}, {outside:.2%} of mass farther than 0.2 from the boundary")

    def check_center_equidistribution(self) -> CheckResult:
        _, density = self._quadratic_scan()
        distances: Dict[int, float] = {}
        for n in (6, 8, 10, 12):
            centers = per_n_centers(n, self.root_tol)
            distances[n] = empirical_vs_density(centers, None, density)
        values = list(distances.values())
        passed = values[-1] < values[0] and all(b <= a + 0.01 for a, b in zip(values, values[1:]))
        return CheckResult("center_equidistribution", passed,
                           ", ".join(f"TV(n={n}) {tv:.4f}" for n, tv in distances.items()))

    def check_lnr_convergence(self) -> CheckResult:
        gaps = []
        for c in HYPERBOLIC_QUADRATIC:
            exact = lyap_formula(instantiate("quadratic", [c]), self.tol, self.max_iter).value
            row = []
            for n in (4, 6, 8, 10):
                spectrum = multiplier_spectrum("quadratic", [c], n, root_tol=self.root_tol)
                approximation = float(np.sum(np.log(np.abs(spectrum.w_list)))) / 2 ** n
                row.append(abs(approximation - exact))
            gaps.append(row)
        gaps = np.array(gaps)
        passed = bool(np.all(gaps[:, -1] < gaps[:, 0]) and np.all(gaps[:, -1] <= 0.05))
        return CheckResult("lnr_convergence", passed,
                           f"max gap at n=4 {gaps[:, 0].max():.4f}, at n=10 {gaps[:, -1].max():.4f}")

    def _cubic_grid(self) -> ParamGrid:
        r_c, r_a = create_family("polyca:3").connectedness_bound()
        return ParamGrid((GridAxis(0j, 1.25 * r_c, self.wedge_resolution),
                          GridAxis(0j, 1.25 * r_a, self.wedge_resolution)))

    def check_cubic_self_wedge(self) -> CheckResult:
        grid = self._cubic_grid()
        g0 = scan_activity("polyca:3", grid, 0, self.tol, self.max_iter, self.workers)
        g1 = scan_activity("polyca:3", grid, 1, self.tol, self.max_iter, self.workers)
        mixed = abs(wedge_density(g0, g1).total_mass)
        worst = max(abs(wedge_density(g0, g0).total_mass), abs(wedge_density(g1, g1).total_mass))
        ratio = worst / mixed if mixed > 0 else math.inf
        return CheckResult("cubic_self_wedge", ratio <= 0.02,
                           f"self-wedge mass {worst:.4e} is {ratio:.2%} of mixed mass {mixed:.4e}",
                           flagged=g0.flagged_count + g1.flagged_count)

    def check_cubic_compactness(self) -> CheckResult:
        grid = self._cubic_grid()
        r_c, r_a = create_family("polyca:3").connectedness_bound()
        first, second = (np.broadcast_to(v, grid.shape) for v in grid.axis_values())
        ball = (np.abs(first) <= r_c) & (np.abs(second) <= r_a)
        field = scan_L("polyca:3", grid, tol=self.tol, max_iter=self.max_iter, workers=self.workers)
        outside = mass_outside(wedge_density(field, field), ball)
        g0 = scan_activity("polyca:3", grid, 0, self.tol, self.max_iter, self.workers)
        g1 = scan_activity("polyca:3", grid, 1, self.tol, self.max_iter, self.workers)
        connected = (g0.values == 0) & (g1.values == 0) & ~g0.flags & ~g1.flags
        stray = int(np.sum(connected & ~ball))
        passed = outside <= 0.02 and stray == 0
        return CheckResult("cubic_compactness", passed,
                           f"{outside:.2%} of bifurcation-measure mass outside the polydisk, "
                           f"{stray} bounded-orbit cell(s) outside it")
